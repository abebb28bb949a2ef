//! Flat checkpoint files for named `f64` matrices.
//!
//! The format is a short ASCII header (magic line, entry count, one
//! `name rows cols` line per array) followed by the concatenated row-major
//! little-endian `f64` payloads in header order. It round-trips exactly —
//! bit-for-bit — which the training loop's resume guarantees depend on.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use ndarray::Array2;

use super::{OptimState, ParamSet};
use crate::error::NnError;

const MAGIC: &str = "acwi-arrays v1";

/// Write named arrays to `path` in listing order.
pub fn save_named_arrays<'a, I>(path: &Path, entries: I) -> Result<(), NnError>
where
    I: IntoIterator<Item = (&'a str, &'a Array2<f64>)>,
{
    let entries: Vec<(&str, &Array2<f64>)> = entries.into_iter().collect();
    for (name, _) in &entries {
        assert!(
            !name.is_empty() && !name.chars().any(char::is_whitespace),
            "array name '{name}' must be non-empty and whitespace-free"
        );
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "{}", entries.len())?;
    for (name, arr) in &entries {
        writeln!(w, "{name} {} {}", arr.nrows(), arr.ncols())?;
    }
    for (_, arr) in &entries {
        for v in arr.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a file written by [`save_named_arrays`], preserving order.
pub fn load_named_arrays(path: &Path) -> Result<IndexMap<String, Array2<f64>>, NnError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = String::new();

    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(NnError::MalformedCheckpoint(format!(
            "bad magic line {:?}",
            line.trim_end()
        )));
    }

    line.clear();
    r.read_line(&mut line)?;
    let count: usize = line
        .trim()
        .parse()
        .map_err(|_| NnError::MalformedCheckpoint(format!("bad entry count {:?}", line.trim())))?;

    let mut headers = Vec::with_capacity(count);
    for _ in 0..count {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(NnError::MalformedCheckpoint("truncated header".into()));
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(rows), Some(cols), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(NnError::MalformedCheckpoint(format!(
                "bad header line {:?}",
                line.trim_end()
            )));
        };
        let rows: usize = rows
            .parse()
            .map_err(|_| NnError::MalformedCheckpoint(format!("bad row count {rows:?}")))?;
        let cols: usize = cols
            .parse()
            .map_err(|_| NnError::MalformedCheckpoint(format!("bad col count {cols:?}")))?;
        headers.push((name.to_string(), rows, cols));
    }

    let mut out = IndexMap::with_capacity(count);
    for (name, rows, cols) in headers {
        let n = rows * cols;
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes).map_err(|e| {
            NnError::MalformedCheckpoint(format!("payload for '{name}' truncated: {e}"))
        })?;
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let arr = Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| NnError::MalformedCheckpoint(format!("shape for '{name}': {e}")))?;
        if out.insert(name.clone(), arr).is_some() {
            return Err(NnError::MalformedCheckpoint(format!(
                "duplicate array name '{name}'"
            )));
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(NnError::MalformedCheckpoint(
            "trailing bytes after payload".into(),
        ));
    }
    Ok(out)
}

impl ParamSet {
    /// Save parameter values (not gradients) in insertion order.
    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        save_named_arrays(path, self.iter().map(|(n, e)| (n, &e.values)))
    }

    /// Load a parameter set saved by [`ParamSet::save`]; gradients start at
    /// zero and insertion order follows the file.
    pub fn load(path: &Path) -> Result<Self, NnError> {
        let mut set = ParamSet::new();
        for (name, values) in load_named_arrays(path)? {
            set.insert(name, values);
        }
        Ok(set)
    }
}

impl OptimState {
    /// Save hyperparameters, step count, and moment buffers.
    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let meta = Array2::from_shape_vec(
            (1, 6),
            vec![
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.eps,
                self.weight_decay,
                self.step_count as f64,
            ],
        )
        .expect("static shape");
        let m_names: Vec<String> = self.first_moment.keys().map(|n| format!("m:{n}")).collect();
        let v_names: Vec<String> = self.second_moment.keys().map(|n| format!("v:{n}")).collect();
        let mut entries: Vec<(&str, &Array2<f64>)> = vec![("adam_meta", &meta)];
        for (label, arr) in m_names.iter().zip(self.first_moment.values()) {
            entries.push((label, arr));
        }
        for (label, arr) in v_names.iter().zip(self.second_moment.values()) {
            entries.push((label, arr));
        }
        save_named_arrays(path, entries)
    }

    /// Load optimizer state saved by [`OptimState::save`].
    pub fn load(path: &Path) -> Result<Self, NnError> {
        let arrays = load_named_arrays(path)?;
        let meta = arrays
            .get("adam_meta")
            .ok_or_else(|| NnError::MalformedCheckpoint("missing adam_meta".into()))?;
        if meta.dim() != (1, 6) {
            return Err(NnError::MalformedCheckpoint(format!(
                "adam_meta has shape {:?}, expected (1, 6)",
                meta.dim()
            )));
        }
        let mut state = OptimState::new(meta[(0, 0)], meta[(0, 4)]);
        state.beta1 = meta[(0, 1)];
        state.beta2 = meta[(0, 2)];
        state.eps = meta[(0, 3)];
        state.step_count = meta[(0, 5)] as u64;
        for (name, arr) in arrays {
            if let Some(param) = name.strip_prefix("m:") {
                state.first_moment.insert(param.to_string(), arr);
            } else if let Some(param) = name.strip_prefix("v:") {
                state.second_moment.insert(param.to_string(), arr);
            }
        }
        if state.first_moment.len() != state.second_moment.len() {
            return Err(NnError::MalformedCheckpoint(
                "moment buffer counts disagree".into(),
            ));
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{MlpSpec, OutputActivation};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn named_arrays_round_trip_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("arrays.bin");
        let a = array![[1.0, -0.0, f64::MIN_POSITIVE], [1e300, -1e-300, 0.125]];
        let b = array![[42.0]];
        save_named_arrays(&path, [("alpha", &a), ("beta.w0", &b)]).unwrap();
        let loaded = load_named_arrays(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        // Order preserved.
        let names: Vec<&String> = loaded.keys().collect();
        assert_eq!(names, ["alpha", "beta.w0"]);
        // Bit-exact values, including the sign of -0.0.
        for (x, y) in a.iter().zip(loaded["alpha"].iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(loaded["beta.w0"], b);
    }

    #[test]
    fn param_set_round_trip_preserves_order_and_values() {
        let spec = MlpSpec::new(3, vec![4], 2, OutputActivation::Identity);
        let mut params = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        spec.init_into(&mut params, "net", 1.0, &mut rng);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.bin");
        params.save(&path).unwrap();
        let loaded = ParamSet::load(&path).unwrap();

        let orig: Vec<&str> = params.names().collect();
        let back: Vec<&str> = loaded.names().collect();
        assert_eq!(orig, back);
        for name in orig {
            assert_eq!(params.values(name).unwrap(), loaded.values(name).unwrap());
        }
        assert_eq!(loaded.grad_norm(), 0.0);
    }

    #[test]
    fn optimizer_state_round_trip_resumes_identically() {
        let mut params = ParamSet::new();
        params.insert("w", array![[1.0, 2.0]]);
        let mut opt = OptimState::new(0.05, 1e-6);
        for _ in 0..3 {
            params.get_mut("w").unwrap().grads.fill(0.3);
            opt.step(&mut params, Some(1.0)).unwrap();
        }

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("opt.bin");
        opt.save(&path).unwrap();
        let mut restored = OptimState::load(&path).unwrap();
        assert_eq!(restored.step_count, 3);
        assert_eq!(restored.learning_rate, 0.05);

        // Continuing from the restored state matches continuing in place.
        let mut params2 = params.clone();
        params.get_mut("w").unwrap().grads.fill(0.3);
        params2.get_mut("w").unwrap().grads.fill(0.3);
        opt.step(&mut params, Some(1.0)).unwrap();
        restored.step(&mut params2, Some(1.0)).unwrap();
        assert_eq!(params.values("w").unwrap(), params2.values("w").unwrap());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();

        let bad_magic = dir.path().join("magic.bin");
        std::fs::write(&bad_magic, b"not-a-checkpoint\n0\n").unwrap();
        assert!(matches!(
            load_named_arrays(&bad_magic),
            Err(NnError::MalformedCheckpoint(_))
        ));

        let truncated = dir.path().join("trunc.bin");
        std::fs::write(&truncated, format!("{MAGIC}\n1\nw 2 2\n\x00\x00")).unwrap();
        assert!(matches!(
            load_named_arrays(&truncated),
            Err(NnError::MalformedCheckpoint(_))
        ));

        let missing = dir.path().join("nope.bin");
        assert!(matches!(load_named_arrays(&missing), Err(NnError::Io(_))));
    }
}
