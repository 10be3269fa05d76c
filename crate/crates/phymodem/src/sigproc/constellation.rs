use num_complex::Complex64;

/// Supported symbol alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    /// Binary antipodal: bit 0 maps to +1, bit 1 to -1.
    Bpsk,
    /// Square 16-QAM, Gray-labeled per axis, unit average energy.
    Qam16,
}

/// A labeled symbol alphabet with unit average energy.
///
/// Labels are the bit patterns carried by each point, packed MSB-first into
/// an integer; they always cover `0..2^bits_per_symbol` exactly once.
#[derive(Debug, Clone)]
pub struct Constellation {
    kind: ConstellationKind,
    /// `point_of_label[l]` is the symbol whose bit pattern equals `l`.
    point_of_label: Vec<Complex64>,
    bits_per_symbol: usize,
}

/// Per-axis Gray code used by the square QAM grid: 00 -> -3, 01 -> -1,
/// 11 -> +1, 10 -> +3 (adjacent amplitudes differ in one bit).
fn gray_axis_level(bits: u32) -> f64 {
    match bits {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        0b10 => 3.0,
        _ => unreachable!("two-bit axis label"),
    }
}

/// Build one of the supported constellations.
pub fn make_constellation(kind: ConstellationKind) -> Constellation {
    match kind {
        ConstellationKind::Bpsk => Constellation {
            kind,
            point_of_label: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            bits_per_symbol: 1,
        },
        ConstellationKind::Qam16 => {
            // First bit pair selects the in-phase level, second pair the
            // quadrature level; 1/sqrt(10) normalizes {±1, ±3}² to unit
            // average energy.
            let scale = 1.0 / 10f64.sqrt();
            let point_of_label = (0..16u32)
                .map(|label| {
                    let re = gray_axis_level((label >> 2) & 0b11);
                    let im = gray_axis_level(label & 0b11);
                    Complex64::new(re * scale, im * scale)
                })
                .collect();
            Constellation {
                kind,
                point_of_label,
                bits_per_symbol: 4,
            }
        }
    }
}

impl Constellation {
    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Number of points in the alphabet.
    pub fn order(&self) -> usize {
        self.point_of_label.len()
    }

    /// The symbol carrying the bit pattern `label`.
    pub fn point_of_label(&self, label: u32) -> Complex64 {
        self.point_of_label[label as usize]
    }

    /// Mean of |p|² over the alphabet; 1.0 by construction.
    pub fn average_energy(&self) -> f64 {
        let sum: f64 = self.point_of_label.iter().map(|p| p.norm_sqr()).sum();
        sum / self.order() as f64
    }

    /// Map a bit string (MSB-first groups of `bits_per_symbol`) to symbols.
    ///
    /// Panics if the length is not a multiple of the symbol size or a bit is
    /// not 0/1.
    pub fn map_bits(&self, bits: &[u8]) -> Vec<Complex64> {
        assert!(
            bits.len() % self.bits_per_symbol == 0,
            "bit string length {} is not a multiple of {} bits per symbol",
            bits.len(),
            self.bits_per_symbol
        );
        bits.chunks_exact(self.bits_per_symbol)
            .map(|group| {
                let mut label = 0u32;
                for &b in group {
                    assert!(b <= 1, "bits must be 0 or 1, got {b}");
                    label = (label << 1) | u32::from(b);
                }
                self.point_of_label[label as usize]
            })
            .collect()
    }

    /// Nearest-point hard decisions, returned as the concatenated labels.
    ///
    /// Exact distance ties resolve to the numerically lower label so that
    /// decisions are deterministic.
    pub fn demap_nearest(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &s in symbols {
            let mut best_label = 0u32;
            let mut best_dist = f64::INFINITY;
            for (label, &p) in self.point_of_label.iter().enumerate() {
                let d = (s - p).norm_sqr();
                // Strict improvement keeps the lowest label on ties because
                // labels are scanned in ascending order.
                if d < best_dist {
                    best_dist = d;
                    best_label = label as u32;
                }
            }
            for i in (0..self.bits_per_symbol).rev() {
                bits.push(((best_label >> i) & 1) as u8);
            }
        }
        bits
    }
}
