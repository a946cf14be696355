use crate::error::{Error, Result};
use crate::indicators::BandMode;
use crate::io::scenario::{GroupSpec, ScenarioFile};
use crate::rules::BuiltinGroup as G;

pub const PRESET_NAMES: [&str; 9] = [
    "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig12",
];

fn base(sigma: f64, keep_noise: bool, groups: &[(G, f64)], comment: &str) -> ScenarioFile {
    ScenarioFile {
        p0: 10.0,
        sigma,
        bootstrap_len: 100,
        horizon: 500,
        seed: 42,
        keep_noise,
        band_mode: BandMode::Literal,
        groups: groups
            .iter()
            .map(|&(g, a)| GroupSpec::builtin(g, a))
            .collect(),
        volume_csv: None,
        index_csv: None,
        manipulator: None,
        portfolio: None,
        comment: Some(comment.to_string()),
    }
}

/// Named reference scenario.
///
/// All share `p0 = 10`, a 100-step random-walk bootstrap and 500 steps in
/// total; `(m, n) = (1, 5)`, `n* = 100`, `w = 0.01` unless noted.
pub fn figure_preset(name: &str) -> Result<ScenarioFile> {
    let f = match name {
        "fig3" => base(
            0.037,
            false,
            &[(G::Ed1, 0.03)],
            "ed1 only, a1 = 0.03 (alternate reading: a1 = 0.2).",
        ),
        "fig4" => base(
            0.05,
            false,
            &[(G::Ed1, 0.2), (G::Ed2, 1.0)],
            "ed1 + ed2, bootstrap sigma 0.05 (alternate reading: 0.005).",
        ),
        "fig5" => base(
            0.05,
            true,
            &[(G::Ed2, 0.5)],
            "random walk plus ed2: noise stays on after the bootstrap.",
        ),
        "fig6" => base(
            0.05,
            false,
            &[(G::Ed1, 0.2), (G::Ed2, 1.0), (G::Ed3, 1.0)],
            "ed1 + ed2 + ed3.",
        ),
        "fig7" => base(0.05, false, &[(G::Ed1, 0.02), (G::Ed4, 1.0)], "ed1 + ed4."),
        "fig8" => base(
            0.05,
            false,
            &[(G::Ed1, 0.02), (G::Ed5, 1.0)],
            "ed1 + ed5, a5 = 1.",
        ),
        "fig9" => base(
            0.04,
            false,
            &[(G::Ed1, 0.2), (G::Ed6, 0.02)],
            "ed1 + ed6 (big sellers).",
        ),
        "fig10" => base(
            0.04,
            false,
            &[(G::Ed1, 0.2), (G::Ed7, 0.02)],
            "ed1 + ed7 (big buyers).",
        ),
        "fig12" => base(
            0.04,
            true,
            &[(G::Ed9, 0.2)],
            "random walk plus ed9 (band breakout), n = 5: noise stays on after the bootstrap.",
        ),
        "fig11" => {
            return Err(Error::Config(
                "fig11: no fixed parameters for the manipulator run; \
                 see scenarios/manipulator.json for an example with illustrative values"
                    .into(),
            ))
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset \"{other}\" (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_resolve() {
        for name in PRESET_NAMES {
            let s = figure_preset(name).unwrap().resolve(None).unwrap();
            assert_eq!(s.horizon, 500);
            assert_eq!(s.p0, 10.0);
        }
    }

    #[test]
    fn fig9_groups() {
        let f = figure_preset("fig9").unwrap();
        assert_eq!(f.sigma, 0.04);
        let kinds: Vec<_> = f.groups.iter().map(|g| g.kind.as_str()).collect();
        assert_eq!(kinds, ["ed1", "ed6"]);
        let s = f.resolve(None).unwrap();
        assert_eq!(s.groups[0].strength.at(200), 0.2);
        assert_eq!(s.groups[1].strength.at(200), 0.02);
    }

    #[test]
    fn fig3_params() {
        let s = figure_preset("fig3").unwrap().resolve(None).unwrap();
        assert_eq!(s.sigma, 0.037);
        assert_eq!(s.groups.len(), 1);
        assert_eq!((s.groups[0].params.m, s.groups[0].params.n), (1, 5));
    }

    #[test]
    fn fig11_points_to_example() {
        let e = figure_preset("fig11").unwrap_err().to_string();
        assert!(e.contains("manipulator.json"), "{e}");
        assert!(figure_preset("fig99").is_err());
    }
}
