//! `--section.field value` flags, pulled out of argv before clap sees it.

/// A config field path and the raw value to assign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub path: String,
    pub value: String,
}

/// Splits `args` into the arguments clap should parse and the field
/// overrides. A flag is an override when its name contains a dot; the
/// value follows `=` or is the next argument. Everything after `--` is
/// left alone.
pub fn extract(args: Vec<String>) -> Result<(Vec<String>, Vec<Override>), String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--" {
            rest.push(arg);
            rest.extend(iter.by_ref());
            break;
        }
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n, Some(v.to_owned())),
            None => (flag, None),
        };
        if !name.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => iter.next().ok_or_else(|| format!("`--{name}` needs a value"))?,
        };
        overrides.push(Override {
            path: name.to_owned(),
            value,
        });
    }
    Ok((rest, overrides))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn splits_dotted_flags() {
        let (rest, o) = extract(strings(&["hoppath", "standard", "--region.x-lo", "-2", "--config", "c.json", "--q_f.t=3"])).unwrap();
        assert_eq!(rest, strings(&["hoppath", "standard", "--config", "c.json"]));
        assert_eq!(
            o,
            vec![
                Override {
                    path: "region.x-lo".into(),
                    value: "-2".into()
                },
                Override {
                    path: "q_f.t".into(),
                    value: "3".into()
                },
            ]
        );
    }

    #[test]
    fn missing_value() {
        assert!(extract(strings(&["hoppath", "--region.x-lo"])).is_err());
    }
}
