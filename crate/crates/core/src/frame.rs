use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Multichannel RF recording: row `i` holds the time series of element `i`,
/// sample `k` taken at `t0 + k / fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame {
    data: Array2<f64>,
    sample_rate: f64,
    start_time: f64,
}

impl RfFrame {
    pub fn new(data: Array2<f64>, sample_rate: f64, start_time: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(
                "rf frame",
                format!("sample rate must be positive, got {sample_rate}"),
            ));
        }
        if !start_time.is_finite() {
            return Err(Error::invalid("rf frame", "start time must be finite"));
        }
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::invalid("rf frame", "frame must have at least one channel and sample"));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "rf frame",
                format!(
                    "non-finite sample at channel {}, index {}",
                    bad / data.ncols(),
                    bad % data.ncols()
                ),
            ));
        }
        Ok(Self {
            data,
            sample_rate,
            start_time,
        })
    }

    pub fn zeros(num_elements: usize, num_samples: usize, sample_rate: f64, start_time: f64) -> Result<Self> {
        Self::new(Array2::zeros((num_elements, num_samples)), sample_rate, start_time)
    }

    pub fn num_elements(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn channel(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    /// Root-mean-square over every channel and sample.
    pub fn rms(&self) -> f64 {
        let n = self.data.len() as f64;
        (self.data.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
    }

    /// Sample-wise sum of two frames with identical layout.
    pub fn add(&self, other: &RfFrame) -> Result<RfFrame> {
        if self.data.dim() != other.data.dim()
            || self.sample_rate != other.sample_rate
            || self.start_time != other.start_time
        {
            return Err(Error::invalid("rf frame", "frames differ in shape or timing"));
        }
        RfFrame::new(&self.data + &other.data, self.sample_rate, self.start_time)
    }
}
