use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use cubic_weyl::{Alpha, Error, Limits, QuadraticIrrational, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Budgets and output settings shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Config {
    pub limits: Limits,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Config {
    pub fn new(max_q: u64, max_n: u64, seed: u64, format: Format, out: Option<PathBuf>) -> Result<Self> {
        if max_q == 0 || max_n == 0 {
            return Err(Error::InvalidInput("budgets must be positive".into()));
        }
        Ok(Config { limits: Limits { max_q, max_n }, seed, format, out })
    }
}

/// `sqrt:<d>`, `quad:<f>,<g>,<c>,<d>` or `rat:<a>/<q>`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSpec(pub Alpha);

fn num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad {what} `{s}` in alpha")))
}

impl FromStr for AlphaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("alpha `{s}` needs a sqrt:, quad: or rat: prefix")))?;
        let alpha = match kind {
            "sqrt" => Alpha::Quadratic(QuadraticIrrational::sqrt(num(body, "d")?)?),
            "quad" => {
                let parts: Vec<&str> = body.split(',').collect();
                let [f, g, c, d] = parts[..] else {
                    return Err(Error::InvalidInput(format!("quad: expects f,g,c,d, got `{body}`")));
                };
                Alpha::Quadratic(QuadraticIrrational::new(num(f, "f")?, num(g, "g")?, num(c, "c")?, num(d, "d")?)?)
            }
            "rat" => {
                let (a, q) = body
                    .split_once('/')
                    .ok_or_else(|| Error::InvalidInput(format!("rat: expects a/q, got `{body}`")))?;
                let q: u64 = num(q, "q")?;
                if q == 0 {
                    return Err(Error::InvalidInput("rat: denominator must be positive".into()));
                }
                Alpha::Rational { a: num(a, "a")?, q }
            }
            other => return Err(Error::InvalidInput(format!("unknown alpha kind `{other}`"))),
        };
        Ok(AlphaSpec(alpha))
    }
}

impl AlphaSpec {
    pub fn quadratic(&self) -> Result<&QuadraticIrrational> {
        match &self.0 {
            Alpha::Quadratic(x) => Ok(x),
            Alpha::Rational { .. } => Err(Error::InvalidInput("this command needs a quadratic irrational".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        let s: AlphaSpec = "sqrt:2".parse().unwrap();
        assert_eq!(s.0, Alpha::Quadratic(QuadraticIrrational::sqrt(2).unwrap()));
        let s: AlphaSpec = "quad:1,-2,3,5".parse().unwrap();
        assert_eq!(s.0, Alpha::Quadratic(QuadraticIrrational::new(1, -2, 3, 5).unwrap()));
        let s: AlphaSpec = "rat:-3/7".parse().unwrap();
        assert_eq!(s.0, Alpha::Rational { a: -3, q: 7 });
        for bad in ["2", "sqrt:4", "sqrt:x", "quad:1,2,3", "rat:1/0", "rat:1", "cube:2"] {
            assert!(bad.parse::<AlphaSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn budgets_positive() {
        assert!(Config::new(0, 1, 0, Format::Json, None).is_err());
        assert!(Config::new(1, 1, 0, Format::Csv, None).is_ok());
    }
}
