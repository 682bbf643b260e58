//! Textual channel specifications such as `attenuation:0.5` or `file:ch.json`.

use std::fmt;
use std::fs;
use std::str::FromStr;

use nogo_core::channels::{
    amplification, attenuation, isotropic_classical_noise, measure_prepare, phase_conjugation, GaussianChannel,
};

pub const KNOWN: &str =
    "attenuation:<eta>, amplification:<eta>, classical-noise:<sigma>, phase-conjugation:<eta>, measure-prepare, identity, file:<path>";

/// A parsed and validated channel together with the text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    text: String,
    channel: GaussianChannel,
}

impl ChannelSpec {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn channel(&self) -> &GaussianChannel {
        &self.channel
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn number(name: &str, arg: Option<&str>) -> Result<f64, String> {
    let arg = arg.ok_or_else(|| format!("{name} needs a parameter, e.g. {name}:0.5"))?;
    arg.trim()
        .parse::<f64>()
        .map_err(|_| format!("{name} parameter {arg:?} is not a number"))
}

fn no_parameter(name: &str, arg: Option<&str>) -> Result<(), String> {
    match arg {
        None => Ok(()),
        Some(a) => Err(format!("{name} takes no parameter, got {a:?}")),
    }
}

impl FromStr for ChannelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let text = s.trim().to_string();
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text.as_str(), None),
        };
        let channel = match name {
            "attenuation" => attenuation(number(name, arg)?),
            "amplification" => amplification(number(name, arg)?),
            "classical-noise" => isotropic_classical_noise(number(name, arg)?),
            "phase-conjugation" => phase_conjugation(number(name, arg)?),
            "measure-prepare" => {
                no_parameter(name, arg)?;
                Ok(measure_prepare())
            }
            "identity" => {
                no_parameter(name, arg)?;
                Ok(GaussianChannel::identity())
            }
            "file" => {
                let path = arg.filter(|p| !p.is_empty()).ok_or("file: needs a path")?;
                let body = fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
                return serde_json::from_str(&body)
                    .map(|channel| ChannelSpec { text: text.clone(), channel })
                    .map_err(|e| format!("{path}: {e}"));
            }
            other => return Err(format!("unknown channel {other:?}; expected one of {KNOWN}")),
        }
        .map_err(|e| e.to_string())?;
        Ok(ChannelSpec { text, channel })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn named_families() {
        let s: ChannelSpec = "attenuation:0.5".parse().unwrap();
        assert_eq!(s.channel(), &attenuation(0.5).unwrap());
        assert_eq!(s.to_string(), "attenuation:0.5");
        assert_eq!("amplification:2".parse::<ChannelSpec>().unwrap().channel().det_m(), 4.0);
        assert_eq!("classical-noise:2.0".parse::<ChannelSpec>().unwrap().channel().det_n(), 4.0);
        assert!("phase-conjugation:1.0".parse::<ChannelSpec>().unwrap().channel().det_m() < 0.0);
        assert_eq!("measure-prepare".parse::<ChannelSpec>().unwrap().channel(), &measure_prepare());
    }

    #[test]
    fn rejects_malformed() {
        let e = "attenuation:1.5".parse::<ChannelSpec>().unwrap_err();
        assert!(e.contains("(0, 1)"), "{e}");
        for bad in ["attenuation", "attenuation:x", "lossy:0.5", "measure-prepare:1", "file:", "file:/no/such/file.json", ""] {
            assert!(bad.parse::<ChannelSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn reads_channel_json() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"M":[[0.5,0.0],[0.0,0.5]],"N":[[0.75,0.0],[0.0,0.75]]}}"#).unwrap();
        let s: ChannelSpec = format!("file:{}", f.path().display()).parse().unwrap();
        assert_eq!(s.channel(), &attenuation(0.5).unwrap());

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        write!(bad, r#"{{"M":[[0.5,0],[0,0.5]],"N":[[0.1,0],[0,0.1]]}}"#).unwrap();
        assert!(format!("file:{}", bad.path().display()).parse::<ChannelSpec>().is_err());
    }
}
