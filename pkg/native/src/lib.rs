//! Native BLS12-381 kernels for `eepaeks`, backed by blst.
//!
//! Mirrors the class surface of `eepaeks._purepy` exactly: G1, G2, GT,
//! `pair` and the fixed-second-argument batch `pair_batch`.

use blst::*;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

const G1_LEN: usize = 48;
const G2_LEN: usize = 96;
const FP_LEN: usize = 48;
const GT_LEN: usize = 12 * FP_LEN;
const SCALAR_BITS: usize = 255;

fn scalar_le(k_be: &[u8]) -> PyResult<blst_scalar> {
    if k_be.len() != 32 {
        return Err(PyValueError::new_err("scalar must be 32 big-endian bytes"));
    }
    let mut s = blst_scalar::default();
    unsafe { blst_scalar_from_bendian(&mut s, k_be.as_ptr()) };
    Ok(s)
}

fn decode_error(e: BLST_ERROR) -> PyErr {
    let msg = match e {
        BLST_ERROR::BLST_BAD_ENCODING => "bad point encoding",
        BLST_ERROR::BLST_POINT_NOT_ON_CURVE => "point not on curve",
        BLST_ERROR::BLST_POINT_NOT_IN_GROUP => "point not in prime-order subgroup",
        _ => "invalid point",
    };
    PyValueError::new_err(msg)
}

#[pyclass(module = "eepaeks._native", frozen)]
#[derive(Clone, Copy)]
pub struct G1 {
    p: blst_p1,
}

#[pymethods]
impl G1 {
    #[staticmethod]
    fn generator() -> Self {
        G1 { p: unsafe { *blst_p1_generator() } }
    }

    #[staticmethod]
    fn identity() -> Self {
        G1 { p: blst_p1::default() }
    }

    #[staticmethod]
    fn hash_to(msg: &[u8], dst: &[u8]) -> Self {
        let mut p = blst_p1::default();
        unsafe {
            blst_hash_to_g1(
                &mut p,
                msg.as_ptr(),
                msg.len(),
                dst.as_ptr(),
                dst.len(),
                std::ptr::null(),
                0,
            )
        };
        G1 { p }
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        if data.len() != G1_LEN {
            return Err(PyValueError::new_err("G1 encoding must be 48 bytes"));
        }
        let mut a = blst_p1_affine::default();
        let err = unsafe { blst_p1_uncompress(&mut a, data.as_ptr()) };
        if err != BLST_ERROR::BLST_SUCCESS {
            return Err(decode_error(err));
        }
        if !unsafe { blst_p1_affine_in_g1(&a) } {
            return Err(decode_error(BLST_ERROR::BLST_POINT_NOT_IN_GROUP));
        }
        let mut p = blst_p1::default();
        unsafe { blst_p1_from_affine(&mut p, &a) };
        let out = G1 { p };
        if out.raw() != data {
            return Err(PyValueError::new_err("non-canonical G1 encoding"));
        }
        Ok(out)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new_bound(py, &self.raw())
    }

    fn mul(&self, k_be: &[u8]) -> PyResult<Self> {
        let s = scalar_le(k_be)?;
        let mut p = blst_p1::default();
        unsafe { blst_p1_mult(&mut p, &self.p, s.b.as_ptr(), SCALAR_BITS) };
        Ok(G1 { p })
    }

    fn add(&self, other: &G1) -> Self {
        let mut p = blst_p1::default();
        unsafe { blst_p1_add_or_double(&mut p, &self.p, &other.p) };
        G1 { p }
    }

    fn neg(&self) -> Self {
        let mut p = self.p;
        unsafe { blst_p1_cneg(&mut p, true) };
        G1 { p }
    }

    fn is_identity(&self) -> bool {
        unsafe { blst_p1_is_inf(&self.p) }
    }

    fn in_group(&self) -> bool {
        unsafe { blst_p1_in_g1(&self.p) }
    }

    fn __eq__(&self, other: &G1) -> bool {
        unsafe { blst_p1_is_equal(&self.p, &other.p) }
    }

    fn __hash__(&self) -> u64 {
        fold_hash(&self.raw())
    }
}

impl G1 {
    fn raw(&self) -> [u8; G1_LEN] {
        let mut out = [0u8; G1_LEN];
        unsafe { blst_p1_compress(out.as_mut_ptr(), &self.p) };
        out
    }

    fn affine(&self) -> blst_p1_affine {
        let mut a = blst_p1_affine::default();
        unsafe { blst_p1_to_affine(&mut a, &self.p) };
        a
    }
}

#[pyclass(module = "eepaeks._native", frozen)]
#[derive(Clone, Copy)]
pub struct G2 {
    p: blst_p2,
}

#[pymethods]
impl G2 {
    #[staticmethod]
    fn generator() -> Self {
        G2 { p: unsafe { *blst_p2_generator() } }
    }

    #[staticmethod]
    fn identity() -> Self {
        G2 { p: blst_p2::default() }
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        if data.len() != G2_LEN {
            return Err(PyValueError::new_err("G2 encoding must be 96 bytes"));
        }
        let mut a = blst_p2_affine::default();
        let err = unsafe { blst_p2_uncompress(&mut a, data.as_ptr()) };
        if err != BLST_ERROR::BLST_SUCCESS {
            return Err(decode_error(err));
        }
        if !unsafe { blst_p2_affine_in_g2(&a) } {
            return Err(decode_error(BLST_ERROR::BLST_POINT_NOT_IN_GROUP));
        }
        let mut p = blst_p2::default();
        unsafe { blst_p2_from_affine(&mut p, &a) };
        let out = G2 { p };
        if out.raw() != data {
            return Err(PyValueError::new_err("non-canonical G2 encoding"));
        }
        Ok(out)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new_bound(py, &self.raw())
    }

    fn mul(&self, k_be: &[u8]) -> PyResult<Self> {
        let s = scalar_le(k_be)?;
        let mut p = blst_p2::default();
        unsafe { blst_p2_mult(&mut p, &self.p, s.b.as_ptr(), SCALAR_BITS) };
        Ok(G2 { p })
    }

    fn add(&self, other: &G2) -> Self {
        let mut p = blst_p2::default();
        unsafe { blst_p2_add_or_double(&mut p, &self.p, &other.p) };
        G2 { p }
    }

    fn neg(&self) -> Self {
        let mut p = self.p;
        unsafe { blst_p2_cneg(&mut p, true) };
        G2 { p }
    }

    fn is_identity(&self) -> bool {
        unsafe { blst_p2_is_inf(&self.p) }
    }

    fn in_group(&self) -> bool {
        unsafe { blst_p2_in_g2(&self.p) }
    }

    fn __eq__(&self, other: &G2) -> bool {
        unsafe { blst_p2_is_equal(&self.p, &other.p) }
    }

    fn __hash__(&self) -> u64 {
        fold_hash(&self.raw())
    }
}

impl G2 {
    fn raw(&self) -> [u8; G2_LEN] {
        let mut out = [0u8; G2_LEN];
        unsafe { blst_p2_compress(out.as_mut_ptr(), &self.p) };
        out
    }

    fn affine(&self) -> blst_p2_affine {
        let mut a = blst_p2_affine::default();
        unsafe { blst_p2_to_affine(&mut a, &self.p) };
        a
    }
}

#[pyclass(module = "eepaeks._native", frozen)]
#[derive(Clone, Copy)]
pub struct GT {
    f: blst_fp12,
}

fn fp12_one() -> blst_fp12 {
    unsafe { *blst_fp12_one() }
}

fn fp12_mul(a: &blst_fp12, b: &blst_fp12) -> blst_fp12 {
    let mut r = blst_fp12::default();
    unsafe { blst_fp12_mul(&mut r, a, b) };
    r
}

#[pymethods]
impl GT {
    #[staticmethod]
    fn one() -> Self {
        GT { f: fp12_one() }
    }

    /// Coefficients in tower order c0.c0.c0, c0.c0.c1, c0.c1.c0, ... each 48-byte big-endian.
    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        if data.len() != GT_LEN {
            return Err(PyValueError::new_err("GT encoding must be 576 bytes"));
        }
        let mut f = blst_fp12::default();
        let mut off = 0;
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    unsafe {
                        blst_fp_from_bendian(&mut f.fp6[i].fp2[j].fp[k], data[off..].as_ptr())
                    };
                    off += FP_LEN;
                }
            }
        }
        let out = GT { f };
        if out.raw()[..] != data[..] {
            return Err(PyValueError::new_err("non-canonical GT encoding"));
        }
        if !unsafe { blst_fp12_in_group(&f) } {
            return Err(PyValueError::new_err("element not in target group"));
        }
        Ok(out)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new_bound(py, &self.raw())
    }

    fn mul(&self, other: &GT) -> Self {
        GT { f: fp12_mul(&self.f, &other.f) }
    }

    fn inv(&self) -> Self {
        let mut r = blst_fp12::default();
        unsafe { blst_fp12_inverse(&mut r, &self.f) };
        GT { f: r }
    }

    fn pow(&self, k_be: &[u8]) -> PyResult<Self> {
        if k_be.len() != 32 {
            return Err(PyValueError::new_err("scalar must be 32 big-endian bytes"));
        }
        let mut acc = fp12_one();
        for byte in k_be {
            for bit in (0..8).rev() {
                let mut sq = blst_fp12::default();
                unsafe { blst_fp12_sqr(&mut sq, &acc) };
                acc = sq;
                if (byte >> bit) & 1 == 1 {
                    acc = fp12_mul(&acc, &self.f);
                }
            }
        }
        Ok(GT { f: acc })
    }

    fn is_one(&self) -> bool {
        unsafe { blst_fp12_is_one(&self.f) }
    }

    fn __eq__(&self, other: &GT) -> bool {
        unsafe { blst_fp12_is_equal(&self.f, &other.f) }
    }

    fn __hash__(&self) -> u64 {
        fold_hash(&self.raw())
    }
}

impl GT {
    fn raw(&self) -> Vec<u8> {
        let mut out = vec![0u8; GT_LEN];
        let mut off = 0;
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    unsafe { blst_bendian_from_fp(out[off..].as_mut_ptr(), &self.f.fp6[i].fp2[j].fp[k]) };
                    off += FP_LEN;
                }
            }
        }
        out
    }
}

fn fold_hash(bytes: &[u8]) -> u64 {
    // FNV-1a; only used for Python dict/set bucketing.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn pairing_affine(p: &blst_p1_affine, q: &blst_p2_affine) -> blst_fp12 {
    let mut ml = blst_fp12::default();
    let mut out = blst_fp12::default();
    unsafe {
        blst_miller_loop(&mut ml, q, p);
        blst_final_exp(&mut out, &ml);
    }
    out
}

#[pyfunction]
fn pair(a: &G1, b: &G2) -> GT {
    if a.is_identity() || b.is_identity() {
        return GT { f: fp12_one() };
    }
    GT { f: pairing_affine(&a.affine(), &b.affine()) }
}

/// e(a_i, b) for every a_i, sharing one line precomputation for b.
#[pyfunction]
fn pair_batch(py: Python<'_>, points: Vec<PyRef<'_, G1>>, b: &G2) -> Vec<GT> {
    let affs: Vec<(bool, blst_p1_affine)> =
        points.iter().map(|p| (p.is_identity(), p.affine())).collect();
    if b.is_identity() {
        return affs.iter().map(|_| GT { f: fp12_one() }).collect();
    }
    let q = b.affine();
    py.allow_threads(|| {
        let mut lines = vec![blst_fp6::default(); 68];
        unsafe { blst_precompute_lines(lines.as_mut_ptr(), &q) };
        affs.iter()
            .map(|(inf, a)| {
                if *inf {
                    return GT { f: fp12_one() };
                }
                let mut ml = blst_fp12::default();
                let mut out = blst_fp12::default();
                unsafe {
                    blst_miller_loop_lines(&mut ml, lines.as_ptr(), a);
                    blst_final_exp(&mut out, &ml);
                }
                GT { f: out }
            })
            .collect()
    })
}

#[pymodule]
fn _native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<G1>()?;
    m.add_class::<G2>()?;
    m.add_class::<GT>()?;
    m.add_function(wrap_pyfunction!(pair, m)?)?;
    m.add_function(wrap_pyfunction!(pair_batch, m)?)?;
    m.add("BACKEND", "blst")?;
    Ok(())
}
