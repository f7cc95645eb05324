use proptest::prelude::*;
use qsu::circuitio::random_circuit;
use qsu::engine::{Circuit, Engine, EngineError, GateSpec, Mode, Prn, RandomSource};
use qsu::gatelib::GateKind;
use qsu::oracle::{compare_states, oracle_apply, oracle_evaluate, OracleState};
use qsu::qstate::{norm_tolerance, QuantumStateRegister};

fn gate(n: usize, measure: bool) -> impl Strategy<Value = GateSpec> {
    let kinds: Vec<GateKind> = GateKind::ALL.into_iter().filter(|k| measure || !k.is_measurement()).collect();
    (prop::sample::select(kinds), 0..n, 1..n.max(2), 0.0f64..=1.0).prop_map(move |(kind, i, dj, p)| {
        if kind.is_two_input() {
            GateSpec::two(kind, i, (i + dj) % n)
        } else if kind.is_error_gate() {
            GateSpec::error(kind, i, p)
        } else {
            GateSpec::one(kind, i)
        }
    })
}

fn static_gate(n: usize) -> impl Strategy<Value = GateSpec> {
    gate(n, false).prop_filter("static", |g| !g.kind.is_error_gate())
}

fn circuit(g: impl Strategy<Value = GateSpec>, len: std::ops::Range<usize>) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(g, len).prop_map(|v| v.into_iter().collect())
}

fn sized<S: Strategy>(f: impl Fn(usize) -> S) -> impl Strategy<Value = (usize, S::Value)> {
    (2usize..=7).prop_flat_map(move |n| (Just(n), f(n)))
}

fn run(
    n: usize,
    c: &Circuit,
    mode: Mode,
    rng: &mut RandomSource,
) -> Result<(QuantumStateRegister, Engine), EngineError> {
    let mut e = Engine::new(n, mode)?.with_trace();
    let mut q = QuantumStateRegister::init_basis(n, 0)?;
    e.evaluate_circuit(&mut q, c, rng)?;
    Ok((q, e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deferred_equals_literal(
        (n, c) in sized(|n| circuit(gate(n, true), 0..60)),
        seed in any::<u64>(),
        forced in prop::collection::vec(any::<u32>(), 0..6),
    ) {
        let go = |mode| {
            let mut rng = RandomSource::with_forced(seed, forced.iter().map(|&r| Prn::from_raw(r)));
            run(n, &c, mode, &mut rng).map(|(q, e)| (q, e.counts().gate_evaluations, rng.drawn()))
        };
        prop_assert_eq!(go(Mode::Deferred), go(Mode::Literal));
    }

    #[test]
    fn norm_preserved_after_every_gate((n, c) in sized(|n| circuit(gate(n, false), 1..200)), seed in any::<u64>()) {
        let mut e = Engine::new(n, Mode::Deferred).unwrap();
        let mut q = QuantumStateRegister::init_basis(n, 0).unwrap();
        let mut rng = RandomSource::new(seed);
        let tol = norm_tolerance(n).to_f64();
        for g in c.gates() {
            if g.kind.is_two_input() {
                e.evaluate_gate2(&mut q, g, &mut rng).unwrap();
            } else {
                e.evaluate_gate1(&mut q, g, &mut rng).unwrap();
            }
            prop_assert!((q.norm_sq().to_f64() - 1.0).abs() <= tol);
        }
    }

    #[test]
    fn circuit_then_inverse_returns_home((n, c) in sized(|n| circuit(static_gate(n), 1..60)), start in any::<usize>()) {
        let start = start % (1 << n);
        let inv = c.inverse().unwrap();
        let mut e = Engine::new(n, Mode::Deferred).unwrap();
        let mut q = QuantumStateRegister::init_basis(n, start).unwrap();
        let mut rng = RandomSource::new(0);
        e.evaluate_circuit(&mut q, &c, &mut rng).unwrap();
        e.evaluate_circuit(&mut q, &inv, &mut rng).unwrap();
        let g = (c.len() + inv.len()) as f64;
        let report = compare_states(&q, &OracleState::basis(n, start).unwrap()).unwrap();
        prop_assert!(report.max_abs_diff <= g * (-14f64).exp2(), "diff {} for {} gates", report.max_abs_diff, g);
    }

    #[test]
    fn engine_tracks_oracle((n, c) in sized(|n| circuit(static_gate(n), 1..200))) {
        let (q, _) = run(n, &c, Mode::Deferred, &mut RandomSource::new(0)).unwrap();
        let (o, _) = oracle_evaluate(&c, n, &mut RandomSource::new(0)).unwrap();
        let d = compare_states(&q, &o).unwrap().max_abs_diff;
        prop_assert!(d <= c.len() as f64 * (-14f64).exp2(), "diff {} for {} gates", d, c.len());
    }

    #[test]
    fn oracle_conserves_norm((n, c) in sized(|n| circuit(static_gate(n), 1000..1001))) {
        let mut s = OracleState::basis(n, 0).unwrap();
        oracle_apply(&mut s, &c, &mut RandomSource::new(0)).unwrap();
        prop_assert!((s.norm_sq() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn every_kind_dispatches((n, g) in sized(|n| gate(n, true)), seed in any::<u64>()) {
        let c: Circuit = [g].into_iter().collect();
        let (_, e) = run(n, &c, Mode::Deferred, &mut RandomSource::new(seed)).unwrap();
        let k = e.counts();
        prop_assert_eq!(k.gate_evaluations + k.measurement_reductions, 1);
        prop_assert_eq!(e.trace().len(), 1);
    }
}

/// With a shared seed, engine and oracle take the same measurement branches
/// unless a draw falls between their two probabilities, or one side finds
/// the qubit sharp while the other does not (the streams then shift by one).
#[test]
fn trajectories_agree_except_on_marginal_draws() {
    let (mut agreed, mut marginal) = (0, 0);
    for seed in 0..200 {
        let doc = random_circuit(5, 3, seed).unwrap();
        let mut c = doc.circuit.clone();
        // Measure mid-circuit as well, so later gates act on collapsed states.
        let mid = c.gates().len() / 2;
        let mut gates = c.gates().to_vec();
        gates.insert(mid, GateSpec::measure((seed % 5) as usize));
        c = gates.into_iter().collect();

        let (_, e) = run(5, &c, Mode::Deferred, &mut RandomSource::new(seed)).unwrap();
        let (_, oo) = oracle_evaluate(&c, 5, &mut RandomSource::new(seed)).unwrap();
        let draws: Vec<Option<Prn>> = e.trace().iter().filter(|t| t.kind == GateKind::M).map(|t| t.prn).collect();
        let mut eng = Engine::new(5, Mode::Deferred).unwrap();
        let mut q = QuantumStateRegister::init_basis(5, 0).unwrap();
        let eo = eng.evaluate_circuit(&mut q, &c, &mut RandomSource::new(seed)).unwrap();

        match eo.iter().zip(&oo).position(|(a, b)| a.bit != b.bit || a.sharp != b.sharp) {
            None => agreed += 1,
            Some(k) => {
                let (pe, po) = (eo[k].p0.to_f64(), oo[k].p0);
                let is_marginal = eo[k].sharp != oo[k].sharp
                    || draws[k].is_some_and(|prn| (pe - po).abs() >= (prn.to_f64() - po).abs());
                assert!(is_marginal, "seed {seed}: measurement {k} diverged on a non-marginal draw");
                marginal += 1;
            }
        }
    }
    assert!(agreed >= 190, "only {agreed} of 200 trajectories agreed ({marginal} marginal)");
}

/// Gates whose products land exactly on half-ULP ties (V, √Y) must not bias
/// the norm upward. Four V gates compose to identity.
#[test]
fn tie_heavy_sequences_do_not_drift() {
    let n = 7;
    let mut c: Circuit = (0..n).map(|q| GateSpec::one(GateKind::H, q)).collect();
    c.extend((0..n).map(|q| GateSpec::one(GateKind::T, q)));
    for r in 0..400 {
        c.push(GateSpec::one(if r % 2 == 0 { GateKind::V } else { GateKind::SqrtY }, r % n));
    }
    let (q, _) = run(n, &c, Mode::Deferred, &mut RandomSource::new(0)).unwrap();
    let drift = (q.norm_sq().to_f64() - 1.0).abs();
    assert!(drift <= norm_tolerance(n).to_f64(), "drift {drift}");
}
