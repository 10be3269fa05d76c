use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::network::{Activation, Layer, Network, NnetError};

/// File signature; the trailing NUL guards against text-mode mangling.
const MAGIC: &[u8; 7] = b"PHYNN1\0";

/// Largest weight matrix accepted by the loader; guards against allocating
/// on garbage headers.
const MAX_MATRIX_ELEMENTS: u64 = 1 << 28;

/// Model file errors.
#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unknown activation id {0}")]
    BadActivation(u8),
    #[error("layer {index} has implausible dimensions {rows}x{cols}")]
    ImplausibleDimensions {
        index: usize,
        rows: u32,
        cols: u32,
    },
    #[error("model is structurally invalid: {0}")]
    Invalid(#[from] NnetError),
}

/// Serialize a network.
///
/// Layout: magic `PHYNN1\0`; little-endian u32 layer count; per layer a
/// header of u32 in_dim, u32 out_dim, u8 activation id; then, layer by
/// layer, the weights (row-major, `out_dim x in_dim`) followed by the
/// biases, all little-endian f64.
pub fn write_model<W: Write>(net: &Network, mut w: W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(net.num_layers() as u32).to_le_bytes())?;
    for layer in &net.layers {
        w.write_all(&(layer.weights.ncols() as u32).to_le_bytes())?;
        w.write_all(&(layer.weights.nrows() as u32).to_le_bytes())?;
        w.write_all(&[layer.activation.id()])?;
    }
    for layer in &net.layers {
        for v in layer.weights.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in layer.biases.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Deserialize a network, validating magic, activation ids, dimension
/// chaining, and parameter finiteness.
pub fn read_model<R: Read>(mut r: R) -> Result<Network, ModelFileError> {
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let mut u32_buf = [0u8; 4];
    r.read_exact(&mut u32_buf)?;
    let n_layers = u32::from_le_bytes(u32_buf) as usize;

    let mut headers = Vec::with_capacity(n_layers);
    for index in 0..n_layers {
        r.read_exact(&mut u32_buf)?;
        let in_dim = u32::from_le_bytes(u32_buf);
        r.read_exact(&mut u32_buf)?;
        let out_dim = u32::from_le_bytes(u32_buf);
        let mut act_buf = [0u8; 1];
        r.read_exact(&mut act_buf)?;
        let activation =
            Activation::from_id(act_buf[0]).ok_or(ModelFileError::BadActivation(act_buf[0]))?;
        if u64::from(in_dim) * u64::from(out_dim) > MAX_MATRIX_ELEMENTS {
            return Err(ModelFileError::ImplausibleDimensions {
                index,
                rows: out_dim,
                cols: in_dim,
            });
        }
        headers.push((in_dim as usize, out_dim as usize, activation));
    }

    let mut f64_buf = [0u8; 8];
    let mut layers = Vec::with_capacity(n_layers);
    for &(in_dim, out_dim, activation) in &headers {
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..in_dim * out_dim {
            r.read_exact(&mut f64_buf)?;
            weights.push(f64::from_le_bytes(f64_buf));
        }
        let mut biases = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            r.read_exact(&mut f64_buf)?;
            biases.push(f64::from_le_bytes(f64_buf));
        }
        layers.push(Layer {
            weights: Array2::from_shape_vec((out_dim, in_dim), weights).expect("sized above"),
            biases: Array1::from_vec(biases),
            activation,
        });
    }

    Ok(Network::from_layers(layers)?)
}

/// Write a network to `path` (see [`write_model`] for the layout).
pub fn save_model<P: AsRef<Path>>(net: &Network, path: P) -> Result<(), ModelFileError> {
    let mut file = BufWriter::new(File::create(path)?);
    write_model(net, &mut file)?;
    file.flush()?;
    Ok(())
}

/// Read a network from `path`.
pub fn load_model<P: AsRef<Path>>(path: P) -> Result<Network, ModelFileError> {
    read_model(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::{network_init, LayerSpec};
    use crate::sigproc::RngStream;

    fn sample_net() -> Network {
        let mut rng = RngStream::new(42, 0);
        network_init(
            &[
                LayerSpec::new(3, 5, Activation::Relu),
                LayerSpec::new(5, 2, Activation::Softmax),
            ],
            &mut rng,
        )
        .unwrap()
    }

    fn to_bytes(net: &Network) -> Vec<u8> {
        let mut buf = Vec::new();
        write_model(net, &mut buf).unwrap();
        buf
    }

    #[test]
    fn roundtrip_preserves_everything_bit_for_bit() {
        let net = sample_net();
        let loaded = read_model(&to_bytes(&net)[..]).unwrap();
        assert_eq!(net.layer_specs(), loaded.layer_specs());
        for (a, b) in net.layers.iter().zip(&loaded.layers) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.biases, b.biases);
            assert_eq!(a.activation, b.activation);
        }
        // Serialization itself is deterministic.
        assert_eq!(to_bytes(&net), to_bytes(&loaded));
    }

    #[test]
    fn file_starts_with_magic_and_layer_count() {
        let bytes = to_bytes(&sample_net());
        assert_eq!(&bytes[..7], b"PHYNN1\0");
        assert_eq!(u32::from_le_bytes(bytes[7..11].try_into().unwrap()), 2);
        // First layer header: in=3, out=5, relu id 0.
        assert_eq!(u32::from_le_bytes(bytes[11..15].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[15..19].try_into().unwrap()), 5);
        assert_eq!(bytes[19], 0);
        // Second layer header: in=5, out=2, softmax id 2.
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 2);
        assert_eq!(bytes[28], 2);
        // Total size: 7 + 4 + 2*9 headers + (3*5+5 + 5*2+2) doubles.
        assert_eq!(bytes.len(), 7 + 4 + 18 + 8 * (15 + 5 + 10 + 2));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = to_bytes(&sample_net());
        bytes[0] = b'X';
        assert!(matches!(
            read_model(&bytes[..]),
            Err(ModelFileError::BadMagic)
        ));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = to_bytes(&sample_net());
        for cut in [3, 9, 15, bytes.len() - 1] {
            assert!(
                matches!(read_model(&bytes[..cut]), Err(ModelFileError::Io(_))),
                "cut at {cut} must fail"
            );
        }
    }

    #[test]
    fn unknown_activation_is_rejected() {
        let mut bytes = to_bytes(&sample_net());
        bytes[19] = 77;
        assert!(matches!(
            read_model(&bytes[..]),
            Err(ModelFileError::BadActivation(77))
        ));
    }

    #[test]
    fn inconsistent_dimension_chain_is_rejected() {
        let mut bytes = to_bytes(&sample_net());
        // Second layer's in_dim: claim 4 instead of 5. The payload length
        // check happens after headers, so corrupt a byte count too small to
        // notice there; the structural validator must catch it.
        bytes[20..24].copy_from_slice(&4u32.to_le_bytes());
        let err = read_model(&bytes[..]);
        assert!(
            matches!(
                err,
                Err(ModelFileError::Invalid(NnetError::DimensionChain { .. }))
                    | Err(ModelFileError::Io(_))
            ),
            "got {err:?}"
        );
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let mut net = sample_net();
        net.layers[0].weights[[0, 0]] = f64::NAN;
        let bytes = to_bytes(&net);
        assert!(matches!(
            read_model(&bytes[..]),
            Err(ModelFileError::Invalid(NnetError::NonFiniteData))
        ));
    }

    #[test]
    fn hidden_softmax_is_rejected_on_load() {
        // Hand-assemble a 2-layer file whose first layer claims softmax.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"PHYNN1\0");
        bytes.extend_from_slice(&2u32.to_le_bytes());
        for (in_dim, out_dim, act) in [(2u32, 3u32, 2u8), (3, 1, 3)] {
            bytes.extend_from_slice(&in_dim.to_le_bytes());
            bytes.extend_from_slice(&out_dim.to_le_bytes());
            bytes.push(act);
        }
        for _ in 0..(2 * 3 + 3 + 3 + 1) {
            bytes.extend_from_slice(&0.5f64.to_le_bytes());
        }
        assert!(matches!(
            read_model(&bytes[..]),
            Err(ModelFileError::Invalid(NnetError::SoftmaxPlacement(0)))
        ));
    }

    #[test]
    fn save_and_load_paths_work() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.phynn");
        let net = sample_net();
        save_model(&net, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(net.layer_specs(), loaded.layer_specs());
    }
}
