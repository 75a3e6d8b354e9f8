//! `key = value` experiment files. Each entry becomes a `--key=value`
//! argument placed before the command-line flags, so flags override it.

use std::path::Path;

use salo_core::Error;

pub fn read_config(path: &Path) -> Result<Vec<String>, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(path, &text)
}

pub fn parse_config(path: &Path, text: &str) -> Result<Vec<String>, Error> {
    let mut args = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse { path: path.to_path_buf(), line: idx + 1, msg: "expected `key = value`".into() });
        };
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() || key == "config" {
            return Err(Error::Parse { path: path.to_path_buf(), line: idx + 1, msg: format!("invalid key `{key}`") });
        }
        args.push(format!("--{key}={}", value.trim()));
    }
    Ok(args)
}

/// Splices the entries of every `--config` file into `argv` right after the
/// subcommand name.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, Error> {
    let mut files = Vec::new();
    let mut it = argv.iter().skip(2);
    while let Some(a) = it.next() {
        if a == "--config" {
            if let Some(p) = it.next() {
                files.push(p.clone());
            }
        } else if let Some(p) = a.strip_prefix("--config=") {
            files.push(p.to_string());
        }
    }
    if files.is_empty() || argv.len() < 2 {
        return Ok(argv);
    }
    let mut out = argv[..2].to_vec();
    for f in files {
        out.extend(read_config(Path::new(&f))?);
    }
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let args = parse_config(Path::new("x"), "# run\noptimizer = salo\n\nsteps=50 # short\n").unwrap();
        assert_eq!(args, ["--optimizer=salo", "--steps=50"]);
        assert!(parse_config(Path::new("x"), "steps 50\n").is_err());
    }
}
