//! Parameter parsing and the INI experiment format.

use anyhow::{anyhow, bail, Context, Result};
use ini::Ini;
use weightlab::intops::{Boundary, ExperimentConfig, FamilySpec};
use weightlab::kernels::KernelSpec;

pub const EXPONENT_MIN: f64 = 1.01;
pub const EXPONENT_MAX: f64 = 100.0;

fn parse_number(raw: &str, what: &str) -> Result<f64> {
    let t = raw.trim();
    match t {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => t.parse().map_err(|_| anyhow!("{what}: cannot parse `{t}` as a number")),
    }
}

/// An exponent in `[1.01, 100]`, or `inf` when `allow_inf`.
pub fn exponent(raw: &str, what: &str, allow_inf: bool) -> Result<f64> {
    let v = parse_number(raw, what)?;
    if v.is_infinite() && v > 0.0 && allow_inf {
        return Ok(v);
    }
    if !(EXPONENT_MIN..=EXPONENT_MAX).contains(&v) {
        bail!("{what} = {raw} outside [{EXPONENT_MIN}, {EXPONENT_MAX}]");
    }
    Ok(v)
}

pub fn exponent_list(raw: &str, what: &str, allow_inf: bool) -> Result<Vec<f64>> {
    let out: Vec<f64> = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| exponent(s, what, allow_inf))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        bail!("{what}: empty list");
    }
    Ok(out)
}

pub fn number_list(raw: &str, what: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_number(s, what))
        .collect::<Result<_>>()?;
    if out.is_empty() || out.iter().any(|v| !v.is_finite()) {
        bail!("{what}: expected a nonempty list of finite numbers, got `{raw}`");
    }
    Ok(out)
}

pub fn size_list(raw: &str, what: &str) -> Result<Vec<usize>> {
    let out: Vec<usize> = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| anyhow!("{what}: `{s}` is not a count")))
        .collect::<Result<_>>()?;
    if out.is_empty() || out.contains(&0) {
        bail!("{what}: expected positive counts, got `{raw}`");
    }
    Ok(out)
}

/// `power:a1,a2,…`.
pub fn power_weights(raw: &str) -> Result<Vec<f64>> {
    let rest = raw
        .strip_prefix("power:")
        .ok_or_else(|| anyhow!("weights: expected `power:a1,a2,…`, got `{raw}`"))?;
    number_list(rest, "weights")
}

/// `name:param` as in `gaussian:0.01` or `box:2`.
pub fn kernel_spec(raw: &str) -> Result<KernelSpec> {
    let (name, param) = raw
        .trim()
        .split_once(':')
        .ok_or_else(|| anyhow!("kernel `{raw}`: expected name:parameter"))?;
    Ok(KernelSpec::parse(name.trim(), parse_number(param, "kernel parameter")?)?)
}

fn positive_count(raw: &str, key: &str) -> Result<usize> {
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => bail!("{key}: expected a positive integer, got `{raw}`"),
    }
}

fn bool_value(raw: &str, key: &str) -> Result<bool> {
    match raw.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => bail!("{key}: expected true or false, got `{other}`"),
    }
}

const SECTIONS: [(&str, &[&str]); 5] = [
    ("kernels", &["set"]),
    ("family", &["kind", "scale", "boundary", "seed", "causal", "n_time", "n_space"]),
    ("exponents", &["p", "q", "s"]),
    ("weights", &["powers"]),
    (
        "search",
        &["n_max", "restarts", "iterations", "step", "rademacher_budgets", "chain_trials", "seed"],
    ),
];

/// Reads an `intop` experiment. Unknown sections or keys are errors;
/// omitted keys keep their defaults.
pub fn experiment_from_ini(text: &str) -> Result<ExperimentConfig> {
    let ini = Ini::load_from_str(text).context("malformed INI")?;
    let mut cfg = ExperimentConfig::default();
    let mut kind = "heat".to_string();
    let mut scale = 0.05;
    let mut boundary = Boundary::Periodic;
    let mut family_seed = 0u64;
    let mut causal = false;
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                bail!("key `{k}` outside any section");
            }
            continue;
        };
        let allowed = SECTIONS
            .iter()
            .find(|(name, _)| *name == section)
            .map(|(_, keys)| *keys)
            .ok_or_else(|| anyhow!("unknown section [{section}]"))?;
        for (key, value) in props.iter() {
            if !allowed.contains(&key) {
                bail!("unknown key `{key}` in [{section}]");
            }
            let full = format!("{section}.{key}");
            match (section, key) {
                ("kernels", "set") => {
                    cfg.kernels = value.split(',').map(kernel_spec).collect::<Result<_>>()?;
                }
                ("family", "kind") => kind = value.trim().to_string(),
                ("family", "scale") => scale = parse_number(value, &full)?,
                ("family", "boundary") => {
                    boundary = match value.trim() {
                        "periodic" => Boundary::Periodic,
                        "zero_padded" => Boundary::ZeroPadded,
                        other => bail!("{full}: unknown boundary `{other}`"),
                    }
                }
                ("family", "seed") => family_seed = value.trim().parse().with_context(|| full.clone())?,
                ("family", "causal") => causal = bool_value(value, &full)?,
                ("family", "n_time") => cfg.n_time = positive_count(value, &full)?,
                ("family", "n_space") => cfg.n_space = positive_count(value, &full)?,
                ("exponents", "p") => cfg.p = exponent(value, &full, false)?,
                ("exponents", "q") => cfg.q = exponent(value, &full, false)?,
                ("exponents", "s") => cfg.s_list = exponent_list(value, &full, true)?,
                ("weights", "powers") => cfg.weight_powers = number_list(value, &full)?,
                ("search", "n_max") => cfg.search.n_max = positive_count(value, &full)?,
                ("search", "restarts") => cfg.search.restarts = positive_count(value, &full)?,
                ("search", "iterations") => cfg.search.iterations = positive_count(value, &full)?,
                ("search", "step") => cfg.search.step = parse_number(value, &full)?,
                ("search", "rademacher_budgets") => {
                    cfg.rademacher_budgets = if value.trim().is_empty() {
                        vec![]
                    } else {
                        size_list(value, &full)?
                    }
                }
                ("search", "chain_trials") => cfg.chain_trials = value.trim().parse().with_context(|| full.clone())?,
                ("search", "seed") => cfg.seed = value.trim().parse().with_context(|| full.clone())?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
    }
    cfg.family = match kind.as_str() {
        "heat" => FamilySpec::Heat { scale, boundary },
        "identity" => FamilySpec::Identity { causal },
        "multiplication" => FamilySpec::Multiplication { seed: family_seed },
        other => bail!("family.kind: unknown family `{other}`"),
    };
    cfg.search.validate()?;
    Ok(cfg)
}

/// Flattened parameter map of an experiment, for CSV metadata.
pub fn experiment_meta(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
    let family = match cfg.family {
        FamilySpec::Heat { scale, boundary } => format!("heat(scale={scale},boundary={boundary:?})"),
        FamilySpec::Identity { causal } => format!("identity(causal={causal})"),
        FamilySpec::Multiplication { seed } => format!("multiplication(seed={seed})"),
    };
    let kernels: Vec<String> = cfg.kernels.iter().map(|k| format!("{}:{}", k.name(), k.param())).collect();
    vec![
        ("kernels".into(), kernels.join(";")),
        ("family".into(), family),
        ("n_time".into(), cfg.n_time.to_string()),
        ("n_space".into(), cfg.n_space.to_string()),
        ("p".into(), cfg.p.to_string()),
        ("q".into(), cfg.q.to_string()),
        ("s".into(), join(&cfg.s_list)),
        ("weights".into(), format!("power:{}", join(&cfg.weight_powers))),
        (
            "search".into(),
            format!(
                "n_max={},restarts={},iterations={},step={}",
                cfg.search.n_max, cfg.search.restarts, cfg.search.iterations, cfg.search.step
            ),
        ),
        (
            "rademacher_budgets".into(),
            cfg.rademacher_budgets.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(";"),
        ),
        ("chain_trials".into(), cfg.chain_trials.to_string()),
        ("seed".into(), cfg.seed.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_window() {
        assert!(exponent("1.01", "p", false).is_ok());
        assert!(exponent("1.0", "p", false).is_err());
        assert!(exponent("101", "p", false).is_err());
        assert!(exponent("inf", "p", false).is_err());
        assert_eq!(exponent("inf", "s", true).unwrap(), f64::INFINITY);
        assert_eq!(exponent_list("1.5, 3", "p", false).unwrap(), vec![1.5, 3.0]);
    }

    #[test]
    fn full_ini() {
        let text = "\
[kernels]
set = gaussian:0.01, box:1
[family]
kind = multiplication
seed = 4
n_time = 16
n_space = 4
[exponents]
p = 3
q = 3
s = 1.25, 2
[weights]
powers = 0, 0.5
[search]
restarts = 4
iterations = 20
rademacher_budgets = 2
";
        let cfg = experiment_from_ini(text).unwrap();
        assert_eq!(cfg.kernels.len(), 2);
        assert_eq!(cfg.family, FamilySpec::Multiplication { seed: 4 });
        assert_eq!((cfg.n_time, cfg.n_space, cfg.p, cfg.q), (16, 4, 3.0, 3.0));
        assert_eq!(cfg.s_list, vec![1.25, 2.0]);
        assert_eq!(cfg.search.restarts, 4);
        assert_eq!(cfg.rademacher_budgets, vec![2]);
    }

    #[test]
    fn rejects_unknown_keys_and_ranges() {
        assert!(experiment_from_ini("[search]\nbogus = 1\n").is_err());
        assert!(experiment_from_ini("[other]\nx = 1\n").is_err());
        assert!(experiment_from_ini("x = 1\n").is_err());
        assert!(experiment_from_ini("[exponents]\np = 0.5\n").is_err());
        assert!(experiment_from_ini("[family]\nkind = wave\n").is_err());
        assert!(experiment_from_ini("[kernels]\nset = sinc:1\n").is_err());
        assert!(experiment_from_ini("").is_ok());
    }
}
