//! Named experiments on the Kubo oscillator and the linear stochastic oscillator.

use padesym::{
    AdditiveScheme, AdditiveSchemeSpec, KuboParams, LinearScheme, LinearSchemeSpec, OscillatorParams, PadePair,
};

use crate::experiment::{Check, Experiment, SchemeDef, SystemDef};

pub const KUBO_GRID: [f64; 5] = [0.01, 0.02, 0.025, 0.05, 0.1];
pub const KUBO_T_END: f64 = 5.0;
pub const KUBO_PATHS: usize = 1000;
pub const KUBO_LONG_T_END: f64 = 100.0;
pub const KUBO_LONG_H: f64 = 0.02;
pub const OSCILLATOR_GRID: [f64; 4] = [0.2, 0.1, 0.05, 0.04];
pub const OSCILLATOR_T_END: f64 = 20.0;
pub const MOMENT_T_END: f64 = 500.0;
pub const MOMENT_H: f64 = 0.1;
pub const MOMENT_PATHS: usize = 500;

fn pair(r: usize, s: usize) -> PadePair {
    PadePair::new(r, s).expect("builtin orders are valid")
}

fn kubo_system() -> SystemDef {
    let params = KuboParams::default();
    SystemDef::Linear {
        sys: params.system().expect("Kubo generators are Hamiltonian"),
        initial: params.initial_state(),
        invariant: params.invariant_matrix(),
    }
}

fn oscillator_system(sigma: f64) -> SystemDef {
    let params = OscillatorParams {
        sigma,
        ..OscillatorParams::default()
    };
    SystemDef::Additive {
        sys: params.system().expect("oscillator is well formed"),
        initial: params.initial_state(),
    }
}

fn pade(order: PadePair) -> SchemeDef {
    SchemeDef::Linear(LinearScheme::Pade(LinearSchemeSpec::new(order)))
}

fn integral() -> SchemeDef {
    SchemeDef::Additive(AdditiveScheme::Pade(
        AdditiveSchemeSpec::integral(pair(2, 2), pair(1, 1)).expect("valid order pair"),
    ))
}

fn left_rectangle() -> SchemeDef {
    SchemeDef::Additive(AdditiveScheme::Pade(AdditiveSchemeSpec::left_rectangle(pair(1, 1))))
}

fn long_kubo(name: String, description: String, scheme: SchemeDef, checks: Vec<Check>) -> Experiment {
    Experiment {
        name,
        description,
        system: kubo_system(),
        scheme,
        grid: vec![KUBO_LONG_H],
        t_end: KUBO_LONG_T_END,
        paths: 1,
        seed: None,
        checks,
    }
}

pub fn builtins() -> Vec<Experiment> {
    let mut out = Vec::new();
    for k in 1..=4 {
        out.push(Experiment {
            name: format!("kubo-({k},{k})"),
            description: format!(
                "Kubo oscillator a=1 sigma=1 from (1,0), ({k},{k}) scheme, T=5, 1000 paths; strong order {k}"
            ),
            system: kubo_system(),
            scheme: pade(pair(k, k)),
            grid: KUBO_GRID.to_vec(),
            t_end: KUBO_T_END,
            paths: KUBO_PATHS,
            seed: None,
            checks: vec![Check::SlopeWithin {
                target: k as f64,
                tol: 0.25,
            }],
        });
    }
    for k in 1..=4 {
        out.push(long_kubo(
            format!("kubo-hamiltonian-({k},{k})"),
            format!("Kubo sample path, ({k},{k}) scheme, h=0.02, T=100; p^2+q^2 conserved"),
            pade(pair(k, k)),
            vec![Check::RelativeDriftAtMost(1e-8), Check::DefectAtMost(1e-9)],
        ));
    }
    out.push(long_kubo(
        "kubo-(1,2)".into(),
        "Kubo sample path with the non-diagonal (1,2) approximant; not symplectic".into(),
        pade(pair(1, 2)),
        vec![Check::DefectAbove(1e-6)],
    ));
    out.push(long_kubo(
        "kubo-euler-maruyama".into(),
        "Kubo sample path with explicit Euler-Maruyama; energy drifts".into(),
        SchemeDef::Linear(LinearScheme::EulerMaruyama),
        vec![Check::RelativeDriftAbove(1e-2)],
    ));
    out.push(Experiment {
        name: "oscillator-integral".into(),
        description: "linear oscillator sigma=0.3 from (0,1), (2,2) drift with (1,1) noise kernel integral, T=20, 500 paths; strong order 3".into(),
        system: oscillator_system(0.3),
        scheme: integral(),
        grid: OSCILLATOR_GRID.to_vec(),
        t_end: OSCILLATOR_T_END,
        paths: 500,
        seed: None,
        checks: vec![Check::SlopeWithin { target: 3.0, tol: 0.3 }],
    });
    out.push(Experiment {
        name: "oscillator-left-rectangle".into(),
        description: "linear oscillator sigma=0.3, (1,1) drift with left-rectangle noise term, T=20, 1000 paths; strong order 1".into(),
        system: oscillator_system(0.3),
        scheme: left_rectangle(),
        grid: OSCILLATOR_GRID.to_vec(),
        t_end: OSCILLATOR_T_END,
        paths: 1000,
        seed: None,
        checks: vec![Check::SlopeWithin { target: 1.0, tol: 0.2 }],
    });
    for (name, scheme) in [
        ("oscillator-integral-moment", integral()),
        ("oscillator-left-rectangle-moment", left_rectangle()),
    ] {
        out.push(Experiment {
            name: name.into(),
            description: "second moment of the linear oscillator, sigma=0.3, h=0.1, T=500, 500 paths; grows like sigma^2 t".into(),
            system: oscillator_system(0.3),
            scheme,
            grid: vec![MOMENT_H],
            t_end: MOMENT_T_END,
            paths: MOMENT_PATHS,
            seed: None,
            checks: vec![Check::MomentSlopeWithin { target: 0.09, rel: 0.1 }],
        });
    }
    out.push(Experiment {
        name: "oscillator-deterministic".into(),
        description: "linear oscillator with sigma=0, h=0.1, T=500; second moment stays flat".into(),
        system: oscillator_system(0.0),
        scheme: integral(),
        grid: vec![MOMENT_H],
        t_end: MOMENT_T_END,
        paths: 4,
        seed: None,
        checks: vec![Check::MomentSlopeAbsAtMost(1e-9)],
    });
    out
}

pub fn find(name: &str) -> Option<Experiment> {
    builtins().into_iter().find(|e| e.name == name)
}
