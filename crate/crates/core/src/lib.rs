//! Fixed-point state-vector simulation of quantum circuits, organized the way
//! an FPGA simulation unit would be: a register of 16-bit-fraction complex
//! amplitudes, a Beneš network that moves operand qubits into the low index
//! bits, one- and two-input gate pools, and a measurement pipeline.
//!
//! ```
//! use qsu::circuitio::parse;
//! use qsu::engine::{rrm_readout, Engine, Mode, RandomSource};
//! use qsu::qstate::QuantumStateRegister;
//!
//! let doc = parse("qubits 2\nh 0\ncnot 1 0\nm 0\nm 1\n").unwrap();
//! let mut engine = Engine::new(doc.n, Mode::Deferred).unwrap();
//! let mut qsr = QuantumStateRegister::init_basis(doc.n, 0).unwrap();
//! engine.evaluate_circuit(&mut qsr, &doc.circuit, &mut RandomSource::new(7)).unwrap();
//! let state = rrm_readout(&qsr).unwrap();
//! assert!(state == 0b00 || state == 0b11);
//! ```
//!
//! [`oracle`] is an independent double-precision simulator used to check
//! the engine; [`sampling`] runs many seeded trials into histograms.

pub mod circuitio;
pub mod engine;
pub mod gatelib;
pub mod histogram;
pub mod numerics;
pub mod oracle;
pub mod permnet;
pub mod qstate;
pub mod sampling;
