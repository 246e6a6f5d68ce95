//! Versioned little-endian binary format for ciphertexts and secret keys.
//!
//! Header: magic (4 bytes), version `u16`, `p: u64`, `r: u32`, `n: u32`,
//! `level: u32`, `tag: u32`. Ciphertexts follow with the noise diagnostic
//! (`f64`) and then `c0` and `c1`, each as `level + 1` limbs of
//! `(q: u64, n × u64)`. Secret keys follow with `n × i8`.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::rns::RnsPoly;
use super::{BgvCiphertext, SecretKey};
use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::ring::RingElem;

pub const FORMAT_VERSION: u16 = 1;

const CT_MAGIC: &[u8; 4] = b"SSCT";
const SK_MAGIC: &[u8; 4] = b"SSSK";

struct Header {
    p: u64,
    r: u32,
    n: u32,
    level: u32,
    tag: u32,
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], h: &Header) -> Result<()> {
    w.write_all(magic)?;
    w.write_u16::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u64::<LittleEndian>(h.p)?;
    w.write_u32::<LittleEndian>(h.r)?;
    w.write_u32::<LittleEndian>(h.n)?;
    w.write_u32::<LittleEndian>(h.level)?;
    w.write_u32::<LittleEndian>(h.tag)?;
    Ok(())
}

fn read_header<R: Read>(rd: &mut R, magic: &[u8; 4], params: &ParamSet) -> Result<Header> {
    let mut got = [0u8; 4];
    rd.read_exact(&mut got)?;
    if &got != magic {
        return Err(Error::Format(format!("bad magic {got:?}")));
    }
    let version = rd.read_u16::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let h = Header {
        p: rd.read_u64::<LittleEndian>()?,
        r: rd.read_u32::<LittleEndian>()?,
        n: rd.read_u32::<LittleEndian>()?,
        level: rd.read_u32::<LittleEndian>()?,
        tag: rd.read_u32::<LittleEndian>()?,
    };
    if h.p != params.p || h.r != params.r || h.n as usize != params.n {
        return Err(Error::Format(format!(
            "file holds (p, r, n) = ({}, {}, {}), parameters are ({}, {}, {})",
            h.p, h.r, h.n, params.p, params.r, params.n
        )));
    }
    if h.level as usize > params.levels() || h.tag == 0 || h.tag > params.r {
        return Err(Error::Format(format!("level {} / tag {} out of range", h.level, h.tag)));
    }
    Ok(h)
}

fn write_poly<W: Write>(w: &mut W, x: &RnsPoly) -> Result<()> {
    for limb in &x.limbs {
        w.write_u64::<LittleEndian>(limb.modulus())?;
        for &c in limb.coeffs() {
            w.write_u64::<LittleEndian>(c)?;
        }
    }
    Ok(())
}

fn read_poly<R: Read>(rd: &mut R, params: &ParamSet, level: usize) -> Result<RnsPoly> {
    let mut limbs = Vec::with_capacity(level + 1);
    for &q in &params.chain[..=level] {
        let got = rd.read_u64::<LittleEndian>()?;
        if got != q {
            return Err(Error::Format(format!("limb modulus {got} does not match chain prime {q}")));
        }
        let mut coeffs = vec![0u64; params.n];
        rd.read_u64_into::<LittleEndian>(&mut coeffs)?;
        if coeffs.iter().any(|&c| c >= q) {
            return Err(Error::Format(format!("coefficient out of range for {q}")));
        }
        limbs.push(RingElem::from_coeffs(coeffs, q)?);
    }
    Ok(RnsPoly { limbs })
}

pub fn write_ciphertext<W: Write>(w: &mut W, ct: &BgvCiphertext, params: &ParamSet) -> Result<()> {
    write_header(
        w,
        CT_MAGIC,
        &Header {
            p: params.p,
            r: params.r,
            n: params.n as u32,
            level: ct.level() as u32,
            tag: ct.tag_exp,
        },
    )?;
    w.write_f64::<LittleEndian>(ct.noise_bits)?;
    write_poly(w, &ct.c0)?;
    write_poly(w, &ct.c1)
}

pub fn read_ciphertext<R: Read>(rd: &mut R, params: &ParamSet) -> Result<BgvCiphertext> {
    let h = read_header(rd, CT_MAGIC, params)?;
    let noise_bits = rd.read_f64::<LittleEndian>()?;
    let c0 = read_poly(rd, params, h.level as usize)?;
    let c1 = read_poly(rd, params, h.level as usize)?;
    Ok(BgvCiphertext {
        c0,
        c1,
        p: params.p,
        tag_exp: h.tag,
        noise_bits,
    })
}

pub fn write_secret_key<W: Write>(w: &mut W, sk: &SecretKey, params: &ParamSet) -> Result<()> {
    write_header(
        w,
        SK_MAGIC,
        &Header {
            p: params.p,
            r: params.r,
            n: params.n as u32,
            level: params.levels() as u32,
            tag: params.r,
        },
    )?;
    for &c in &sk.coeffs {
        w.write_i8(c as i8)?;
    }
    Ok(())
}

pub fn read_secret_key<R: Read>(rd: &mut R, params: &ParamSet) -> Result<SecretKey> {
    read_header(rd, SK_MAGIC, params)?;
    let mut coeffs = vec![0i8; params.n];
    rd.read_i8_into(&mut coeffs)?;
    SecretKey::from_coeffs(coeffs.into_iter().map(i64::from).collect())
}
