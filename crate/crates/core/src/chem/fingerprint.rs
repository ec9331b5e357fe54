use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Fixed-width bit vector with a cached popcount.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    width: usize,
    words: Vec<u64>,
    popcount: u32,
}

impl Fingerprint {
    pub fn zeros(width: usize) -> Self {
        Self {
            width,
            words: vec![0; width.div_ceil(64)],
            popcount: 0,
        }
    }

    pub fn from_bits(width: usize, bits: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut fp = Self::zeros(width);
        for b in bits {
            if b >= width {
                return Err(Error::invalid(format!("bit {b} outside width {width}")));
            }
            fp.words[b / 64] |= 1 << (b % 64);
        }
        fp.recount();
        Ok(fp)
    }

    /// Bytes in order, least significant bit first: bit `8k + j` is bit `j`
    /// of byte `k`. The string must hold exactly `ceil(width / 8)` bytes and
    /// no bit at or beyond `width` may be set.
    pub fn from_hex(width: usize, text: &str) -> Result<Self> {
        let bytes = hex::decode(text.trim()).map_err(|e| Error::invalid(format!("bad hex fingerprint: {e}")))?;
        let want = width.div_ceil(8);
        if bytes.len() != want {
            return Err(Error::Dimension {
                context: "fingerprint bytes",
                expected: want,
                got: bytes.len(),
            });
        }
        let mut fp = Self::zeros(width);
        for (k, byte) in bytes.iter().enumerate() {
            fp.words[k / 8] |= (*byte as u64) << (8 * (k % 8));
        }
        if !width.is_multiple_of(64) {
            let tail = fp.words[fp.words.len() - 1] >> (width % 64);
            if tail != 0 {
                return Err(Error::invalid(format!("fingerprint has bits set beyond width {width}")));
            }
        }
        fp.recount();
        Ok(fp)
    }

    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = (0..self.width.div_ceil(8))
            .map(|k| (self.words[k / 8] >> (8 * (k % 8))) as u8)
            .collect();
        hex::encode(bytes)
    }

    fn recount(&mut self) {
        self.popcount = self.words.iter().map(|w| w.count_ones()).sum();
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn popcount(&self) -> u32 {
        self.popcount
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn intersection_count(&self, other: &Fingerprint) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }
}

/// Tanimoto coefficient `c / (a + b - c)` over set bits.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    if a.width != b.width {
        return Err(Error::Dimension {
            context: "fingerprint width",
            expected: a.width,
            got: b.width,
        });
    }
    if a.popcount == 0 && b.popcount == 0 {
        return Err(Error::invalid("tanimoto of two empty fingerprints is undefined"));
    }
    Ok(raw_tanimoto(a, b))
}

fn raw_tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let c = a.intersection_count(b);
    c as f64 / (a.popcount + b.popcount - c) as f64
}

/// Like [`tanimoto`] but two empty fingerprints score 0. Used by the
/// collection-level operations so an empty key set never counts as a
/// neighbour. Widths must already agree.
pub fn similarity_or_zero(a: &Fingerprint, b: &Fingerprint) -> f64 {
    if a.popcount == 0 && b.popcount == 0 {
        0.0
    } else {
        raw_tanimoto(a, b)
    }
}

pub(crate) fn check_widths(fps: &[Fingerprint]) -> Result<()> {
    if let Some(first) = fps.first() {
        if let Some(bad) = fps.iter().find(|f| f.width != first.width) {
            return Err(Error::Dimension {
                context: "fingerprint width",
                expected: first.width,
                got: bad.width,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub mean: f64,
    pub std: f64,
    pub pairs: usize,
}

/// Mean and population standard deviation of the similarity over all
/// unordered pairs.
pub fn mean_pairwise_similarity(fps: &[Fingerprint]) -> Result<SimilarityStats> {
    if fps.len() < 2 {
        return Err(Error::invalid("pairwise similarity needs at least two fingerprints"));
    }
    check_widths(fps)?;
    let n = fps.len();
    let rows: Vec<Vec<f64>> = par::map_range(n, |i| {
        (i + 1..n).map(|j| similarity_or_zero(&fps[i], &fps[j])).collect()
    });
    let pairs: usize = rows.iter().map(Vec::len).sum();
    let mean = rows.iter().flatten().sum::<f64>() / pairs as f64;
    let var = rows.iter().flatten().map(|s| (s - mean).powi(2)).sum::<f64>() / pairs as f64;
    Ok(SimilarityStats {
        mean,
        std: var.sqrt(),
        pairs,
    })
}

/// Fingerprints with their ids, as read from a fingerprint file.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintSet {
    pub width: usize,
    pub ids: Vec<String>,
    pub fingerprints: Vec<Fingerprint>,
}

pub fn read_fingerprints(path: impl AsRef<Path>) -> Result<FingerprintSet> {
    read_fingerprints_from(File::open(path)?)
}

/// `# width=N` on the first line, then CSV with `id` and `fp_hex` columns.
pub fn read_fingerprints_from<R: Read>(reader: R) -> Result<FingerprintSet> {
    let mut buf = BufReader::new(reader);
    let mut first = String::new();
    buf.read_line(&mut first)?;
    let width = first
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("width="))
        .and_then(|w| w.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .ok_or_else(|| Error::Csv {
            line: 1,
            message: "expected `# width=<bits>` header comment".into(),
        })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(buf);
    let headers = rdr.headers().map_err(|e| Error::Csv {
        line: 2,
        message: e.to_string(),
    })?;
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Csv {
            line: 2,
            message: format!("missing column `{name}`"),
        })
    };
    let (id_col, fp_col) = (col("id")?, col("fp_hex")?);
    let mut set = FingerprintSet {
        width,
        ids: Vec::new(),
        fingerprints: Vec::new(),
    };
    for row in rdr.records() {
        let row = row?;
        // +1 for the width comment the csv reader never saw
        let line = row.position().map_or(0, |p| p.line() + 1);
        let fp = Fingerprint::from_hex(width, &row[fp_col]).map_err(|e| Error::Csv {
            line,
            message: e.to_string(),
        })?;
        set.ids.push(row[id_col].to_string());
        set.fingerprints.push(fp);
    }
    Ok(set)
}

pub fn write_fingerprints_to<W: Write>(mut writer: W, set: &FingerprintSet) -> Result<()> {
    writeln!(writer, "# width={}", set.width)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "fp_hex"]).map_err(Error::from)?;
    for (id, fp) in set.ids.iter().zip(&set.fingerprints) {
        w.write_record([id.as_str(), fp.to_hex().as_str()]).map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}
