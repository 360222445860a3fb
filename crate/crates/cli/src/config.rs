//! Class-constant overrides: defaults, then a config file, then `--set`
//! flags, in increasing precedence.

use crate::CliError;
use laa3d::data::{default_class_config, ClassConfig, ObjectClass};
use std::path::Path;

/// Apply one `<class>.<field> = <values>` assignment.
fn apply(config: &mut ClassConfig, key: &str, values: &[&str], origin: &str) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Input(format!("{origin}: {m}")));
    let (class_name, field) = match key.split_once('.') {
        Some(pair) => pair,
        None => return bad(format!("override key `{key}` must look like CLASS.field")),
    };
    let class: ObjectClass = match class_name.parse() {
        Ok(c) => c,
        Err(e) => return bad(e.to_string()),
    };
    let nums: Result<Vec<f64>, _> = values.iter().map(|v| v.parse::<f64>()).collect();
    let nums = match nums {
        Ok(n) => n,
        Err(_) => return bad(format!("cannot parse numbers in `{}`", values.join(" "))),
    };
    let params = config.class_mut(class);
    match (field, nums.len()) {
        ("ap_thresholds", 4) => {
            params.ap_thresholds = [nums[0], nums[1], nums[2], nums[3]];
        }
        ("tp_max_translation", 1) => params.tp_max_translation = nums[0],
        ("tp_max_rotation", 1) => params.tp_max_rotation = nums[0],
        ("tp_max_size", 1) => params.tp_max_size = nums[0],
        ("mot_threshold", 1) => params.mot_threshold = nums[0],
        ("depth_range", 1) => params.depth_range = nums[0],
        _ => return bad(format!("unknown field `{field}` or wrong value count")),
    }
    Ok(())
}

/// Build the effective config from an optional file plus `--set` overrides.
pub fn resolve(config_path: Option<&Path>, sets: &[String]) -> Result<ClassConfig, CliError> {
    let mut config = default_class_config();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = match line.split_once('=') {
                Some((k, r)) => (k.trim(), r.trim()),
                None => {
                    return Err(CliError::Input(format!(
                        "{}:{}: expected `CLASS.field = values`",
                        path.display(),
                        idx + 1
                    )))
                }
            };
            let values: Vec<&str> = rest.split_whitespace().collect();
            apply(&mut config, key, &values, &format!("{}:{}", path.display(), idx + 1))?;
        }
    }
    for set in sets {
        let (key, rest) = set
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--set `{set}` must look like CLASS.field=value")))?;
        let values: Vec<&str> = rest.split(',').map(str::trim).collect();
        apply(&mut config, key.trim(), &values, "--set")?;
    }
    config
        .validate()
        .map_err(|e| CliError::Input(format!("invalid class config: {e}")))?;
    Ok(config)
}

/// Parse the `--classes` filter.
pub fn parse_classes(list: Option<&str>) -> Result<Option<Vec<ObjectClass>>, CliError> {
    match list {
        None => Ok(None),
        Some(s) => {
            let mut classes = Vec::new();
            for token in s.split(',') {
                let class: ObjectClass = token
                    .trim()
                    .parse()
                    .map_err(|e| CliError::Input(format!("--classes: {e}")))?;
                if !classes.contains(&class) {
                    classes.push(class);
                }
            }
            Ok(Some(classes))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_overrides_beat_file() {
        let dir = std::env::temp_dir().join("laa3d-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.txt");
        std::fs::write(&path, "MAV.mot_threshold = 5\n# comment\neVTOL.depth_range = 200\n").unwrap();
        let cfg = resolve(Some(&path), &["MAV.mot_threshold=7".into()]).unwrap();
        assert_eq!(cfg.mav.mot_threshold, 7.0);
        assert_eq!(cfg.evtol.depth_range, 200.0);
    }

    #[test]
    fn invalid_override_rejected() {
        assert!(resolve(None, &["MAV.bogus=1".into()]).is_err());
        assert!(resolve(None, &["MAV.mot_threshold=-1".into()]).is_err());
    }

    #[test]
    fn classes_filter() {
        let classes = parse_classes(Some("MAV,Helicopter")).unwrap().unwrap();
        assert_eq!(classes, vec![ObjectClass::Mav, ObjectClass::Helicopter]);
        assert!(parse_classes(Some("drone")).is_err());
    }
}
