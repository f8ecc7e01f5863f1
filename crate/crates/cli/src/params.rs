use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};

/// `key=value` construction parameters from the command line.
#[derive(Clone, Debug, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn parse(args: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for a in args {
            let (k, v) = a.split_once('=').ok_or_else(|| anyhow!("parameter `{a}` is not key=value"))?;
            if values.insert(k.to_string(), v.to_string()).is_some() {
                bail!("parameter `{k}` given twice");
            }
        }
        Ok(Params { values })
    }

    pub fn with(&self, key: &str, value: impl ToString) -> Self {
        let mut p = self.clone();
        p.values.insert(key.to_string(), value.to_string());
        p
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::error::Error + Send + Sync + 'static,
    {
        let v = self.raw(key).ok_or_else(|| anyhow!("missing parameter `{key}`"))?;
        v.parse().with_context(|| format!("parameter `{key}={v}`"))
    }

    /// One of `choices`, defaulting to the first.
    pub fn choice(&self, key: &str, choices: &[&'static str]) -> Result<&'static str> {
        match self.raw(key) {
            None => Ok(choices[0]),
            Some(v) => choices
                .iter()
                .copied()
                .find(|c| *c == v)
                .ok_or_else(|| anyhow!("parameter `{key}` must be one of {}", choices.join(", "))),
        }
    }

    /// Canonical `k=v;k=v` rendering, used in report rows.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

/// Values of a bench axis: `a..b` doubles from `a` up to `b`, `a..b+s` steps by `s`,
/// `a,b,c` lists, a single number is itself.
pub fn parse_range(spec: &str) -> Result<Vec<usize>> {
    let num = |s: &str| s.trim().parse::<usize>().with_context(|| format!("range `{spec}`"));
    if let Some((lo, rest)) = spec.split_once("..") {
        let (hi, step) = match rest.split_once('+') {
            Some((hi, s)) => (num(hi)?, Some(num(s)?)),
            None => (num(rest)?, None),
        };
        let lo = num(lo)?;
        if lo == 0 || lo > hi || step == Some(0) {
            bail!("range `{spec}` is empty or does not advance");
        }
        let mut out = vec![];
        let mut v = lo;
        while v <= hi {
            out.push(v);
            v = match step {
                Some(s) => v + s,
                None => v * 2,
            };
        }
        Ok(out)
    } else {
        spec.split(',').map(num).collect()
    }
}
