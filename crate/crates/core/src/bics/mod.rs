//! Bit-interleaved coded modulation: convolutional coding with puncturing,
//! random bit interleaving and Gray QAM, plus the soft inverses used by the
//! iterative receiver.

pub mod conv;
pub mod interleaver;
pub mod puncture;
pub mod qam;

use crate::{Error, Result, C64};
use conv::ConvCode;
use interleaver::Interleaver;
use puncture::{depuncture, puncture, CodeRate};
use qam::{Qam, QamOrder};

/// Channel code and constellation of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecConfig {
    pub rate: CodeRate,
    pub qam: QamOrder,
}

/// One frame of the BICM chain: `n_info` information bits are encoded,
/// terminated, punctured, padded with zeros to fill `n_symbols` QAM symbols,
/// interleaved and mapped.
#[derive(Debug, Clone)]
pub struct Bicm {
    config: CodecConfig,
    code: ConvCode,
    qam: Qam,
    interleaver: Interleaver,
    n_symbols: usize,
    n_info: usize,
    mother_len: usize,
    punctured_len: usize,
}

/// Result of one decoder pass over a frame.
#[derive(Debug, Clone)]
pub struct FrameDecode {
    pub bits: Vec<u8>,
    /// Extrinsic coded-bit LLRs in interleaved (channel) order; padding positions are 0.
    pub extrinsic: Vec<f64>,
}

impl Bicm {
    pub fn new(config: CodecConfig, n_symbols: usize, interleaver_seed: u64) -> Result<Self> {
        let qam = Qam::new(config.qam);
        let n_coded = n_symbols * qam.bits_per_symbol();
        // Largest information block whose punctured, terminated codeword fits.
        let mut n_info = (n_coded as f64 * config.rate.value()) as usize;
        while n_info > 0 && config.rate.punctured_len(ConvCode::coded_len(n_info)) > n_coded {
            n_info -= 1;
        }
        if n_info == 0 {
            return Err(Error::Config(format!(
                "{n_symbols} symbols of {} cannot carry a terminated codeword",
                config.qam
            )));
        }
        let mother_len = ConvCode::coded_len(n_info);
        Ok(Self {
            config,
            code: ConvCode::new(),
            qam,
            interleaver: Interleaver::new(n_coded, interleaver_seed),
            n_symbols,
            n_info,
            mother_len,
            punctured_len: config.rate.punctured_len(mother_len),
        })
    }

    pub fn config(&self) -> CodecConfig {
        self.config
    }

    pub fn qam(&self) -> &Qam {
        &self.qam
    }

    pub fn n_info(&self) -> usize {
        self.n_info
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_coded(&self) -> usize {
        self.interleaver.len()
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    /// Interleaved coded bits of a frame.
    pub fn encode_bits(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.n_info {
            return Err(Error::dim("frame information bits", self.n_info, info.len()));
        }
        let mut coded = puncture(&self.code.encode(info), self.config.rate)?;
        coded.resize(self.n_coded(), 0);
        Ok(self.interleaver.interleave(&coded))
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<C64>> {
        self.qam.map(&self.encode_bits(info)?)
    }

    /// Deinterleaves channel LLRs, decodes, and returns the decoder's
    /// extrinsic LLRs re-interleaved for the detector.
    pub fn decode(&self, channel_llrs: &[f64]) -> Result<FrameDecode> {
        if channel_llrs.len() != self.n_coded() {
            return Err(Error::dim("frame coded LLRs", self.n_coded(), channel_llrs.len()));
        }
        let deint = self.interleaver.deinterleave(channel_llrs);
        let mother = depuncture(&deint[..self.punctured_len], self.config.rate, self.mother_len)?;
        let out = self.code.siso_decode(&mother)?;
        let mut ext = puncture(&out.extrinsic, self.config.rate)?;
        ext.resize(self.n_coded(), 0.0);
        Ok(FrameDecode {
            bits: out.bits,
            extrinsic: self.interleaver.interleave(&ext),
        })
    }
}
