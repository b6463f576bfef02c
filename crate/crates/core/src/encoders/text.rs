//! Line-oriented text persistence for [`EncoderSpec`] and [`MinMaxScaler`].
//!
//! ```text
//! eventsel-encoder v1
//! threshold<TAB>256
//! buckets<TAB>262144
//! feature<TAB><name><TAB>onehot|hashed|numeric<TAB><n_levels>
//! level<TAB><level>          (n_levels times, in fitted order)
//! end
//!
//! eventsel-scaler v1
//! range<TAB><name><TAB><min><TAB><max>
//! end
//! ```
//!
//! Names and levels escape `\`, tab, newline and carriage return. Floats are
//! written with `Display`, which round-trips exactly.

use std::io::{self, Write};

use super::{
    EncodeError, EncoderParams, EncoderSpec, FeatureEncoder, FeatureEncoding, MinMaxScaler,
};
use crate::textio::{
    err, escape, expect_header, fmt_f64, keyed, next_line, parse, unescape, value,
};

pub const ENCODER_HEADER: &str = "eventsel-encoder v1";
pub const SCALER_HEADER: &str = "eventsel-scaler v1";

pub fn write_encoder<W: Write>(spec: &EncoderSpec, mut w: W) -> io::Result<()> {
    writeln!(w, "{ENCODER_HEADER}")?;
    writeln!(w, "threshold\t{}", spec.params.cardinality_threshold)?;
    writeln!(w, "buckets\t{}", spec.params.hash_buckets)?;
    for f in &spec.features {
        let (kind, levels): (&str, &[String]) = match &f.encoding {
            FeatureEncoding::OneHot { levels } => ("onehot", levels),
            FeatureEncoding::Hashed { levels } => ("hashed", levels),
            FeatureEncoding::Numeric => ("numeric", &[]),
        };
        writeln!(w, "feature\t{}\t{kind}\t{}", escape(&f.name), levels.len())?;
        for l in levels {
            writeln!(w, "level\t{}", escape(l))?;
        }
    }
    writeln!(w, "end")
}

pub fn write_scaler<W: Write>(s: &MinMaxScaler, mut w: W) -> io::Result<()> {
    writeln!(w, "{SCALER_HEADER}")?;
    for (name, lo, hi) in &s.ranges {
        writeln!(
            w,
            "range\t{}\t{}\t{}",
            escape(name),
            fmt_f64(*lo),
            fmt_f64(*hi)
        )?;
    }
    writeln!(w, "end")
}

/// Reads an encoder section from numbered lines, consuming through `end`.
pub fn read_encoder<'a, I>(lines: &mut I) -> Result<EncoderSpec, EncodeError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    expect_header(lines, ENCODER_HEADER)?;
    let (n, t) = value(lines, "threshold")?;
    let cardinality_threshold = parse(n, t)?;
    let (n, t) = value(lines, "buckets")?;
    let params = EncoderParams {
        cardinality_threshold,
        hash_buckets: parse(n, t)?,
    };
    params.validate()?;

    let mut features = Vec::new();
    loop {
        let (n, t) = next_line(lines, "feature or end")?;
        if t == "end" {
            break;
        }
        let f = keyed(n, t, "feature", 3)?;
        let name = unescape(n, f[0])?;
        let count: usize = parse(n, f[2])?;
        let mut levels = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let (m, t) = value(lines, "level")?;
            levels.push(unescape(m, t)?);
        }
        let encoding = match f[1] {
            "onehot" => FeatureEncoding::OneHot { levels },
            "hashed" => FeatureEncoding::Hashed { levels },
            "numeric" if count == 0 => FeatureEncoding::Numeric,
            other => {
                return Err(
                    err(n, format!("unknown encoding `{other}` with {count} levels")).into(),
                )
            }
        };
        features.push(FeatureEncoder { name, encoding });
    }
    Ok(EncoderSpec { params, features })
}

pub fn read_scaler<'a, I>(lines: &mut I) -> Result<MinMaxScaler, EncodeError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    expect_header(lines, SCALER_HEADER)?;
    let mut ranges = Vec::new();
    loop {
        let (n, t) = next_line(lines, "range or end")?;
        if t == "end" {
            break;
        }
        let f = keyed(n, t, "range", 3)?;
        ranges.push((unescape(n, f[0])?, parse(n, f[1])?, parse(n, f[2])?));
    }
    Ok(MinMaxScaler { ranges })
}
