use std::io::{Read, Write};

use thiserror::Error;

use crate::attitude_error::ErrorState;
use crate::controllers::EstimatorState;
use crate::dynamics::{BodyState, InertiaMatrix};
use crate::so3::{Mat3, Vec3};
use crate::trajectory::CommandSample;

pub const CSV_HEADER: [&str; 46] = [
    "t", "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33", "Wx", "Wy", "Wz", "Rd11", "Rd12", "Rd13",
    "Rd21", "Rd22", "Rd23", "Rd31", "Rd32", "Rd33", "Wdx", "Wdy", "Wdz", "eRx", "eRy", "eRz", "eWx", "eWy", "eWz",
    "Psi", "ux", "uy", "uz", "Dx", "Dy", "Dz", "Jb11", "Jb12", "Jb13", "Jb22", "Jb23", "Jb33", "V", "Jtilde_F",
];

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing header row")]
    MissingHeader,
    #[error("header column {index}: expected {expected:?}, found {found:?}")]
    Column { index: usize, expected: &'static str, found: String },
    #[error("header has {0} columns, expected {n}", n = CSV_HEADER.len())]
    ColumnCount(usize),
    #[error("row {row}, column {column}: {value:?} is not a number")]
    Value { row: usize, column: &'static str, value: String },
}

/// One recorded output instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub r: Mat3,
    pub omega: Vec3,
    pub rd: Mat3,
    pub omega_d: Vec3,
    pub e_r: Vec3,
    pub e_omega: Vec3,
    pub psi: f64,
    pub u: Vec3,
    pub delta: Vec3,
    pub j_bar: Mat3,
    pub v: f64,
    pub j_tilde_f: f64,
}

impl Sample {
    #[allow(clippy::too_many_arguments)]
    pub fn record(
        t: f64,
        state: &BodyState,
        cmd: &CommandSample,
        e: &ErrorState,
        u: &Vec3,
        delta: &Vec3,
        est: &EstimatorState,
        v: f64,
        j_true: &InertiaMatrix,
    ) -> Self {
        Self {
            t,
            r: *state.r.matrix(),
            omega: state.omega,
            rd: *cmd.rd.matrix(),
            omega_d: cmd.omega_d,
            e_r: e.e_r,
            e_omega: e.e_omega,
            psi: e.psi,
            u: *u,
            delta: *delta,
            j_bar: est.j_bar,
            v,
            j_tilde_f: (j_true.matrix() - est.j_bar).norm(),
        }
    }

    fn values(&self) -> [f64; 46] {
        let mut out = [0.0; 46];
        let mut i = 0;
        let mut put = |x: f64| {
            out[i] = x;
            i += 1;
        };
        put(self.t);
        self.r.transpose().iter().for_each(|&x| put(x));
        self.omega.iter().for_each(|&x| put(x));
        self.rd.transpose().iter().for_each(|&x| put(x));
        for v in [&self.omega_d, &self.e_r, &self.e_omega] {
            v.iter().for_each(|&x| put(x));
        }
        put(self.psi);
        for v in [&self.u, &self.delta] {
            v.iter().for_each(|&x| put(x));
        }
        for (row, col) in UPPER {
            put(self.j_bar[(row, col)]);
        }
        put(self.v);
        put(self.j_tilde_f);
        out
    }

    fn from_values(x: &[f64; 46]) -> Self {
        let mat = |k: usize| Mat3::from_row_slice(&x[k..k + 9]);
        let vec = |k: usize| Vec3::new(x[k], x[k + 1], x[k + 2]);
        let mut j_bar = Mat3::zeros();
        for (i, (row, col)) in UPPER.into_iter().enumerate() {
            j_bar[(row, col)] = x[38 + i];
            j_bar[(col, row)] = x[38 + i];
        }
        Self {
            t: x[0],
            r: mat(1),
            omega: vec(10),
            rd: mat(13),
            omega_d: vec(22),
            e_r: vec(25),
            e_omega: vec(28),
            psi: x[31],
            u: vec(32),
            delta: vec(35),
            j_bar,
            v: x[44],
            j_tilde_f: x[45],
        }
    }
}

const UPPER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { samples: Vec::with_capacity(n) }
    }

    pub fn push(&mut self, s: Sample) {
        self.samples.push(s);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Header plus one row per sample, floats as `{:.16e}` (17 significant digits).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SeriesError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for s in &self.samples {
            out.write_record(s.values().iter().map(|x| format!("{x:.16e}")))?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// Parses a CSV written by [`TimeSeries::write_csv`], rejecting any header deviation.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, SeriesError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut records = rdr.records();
        let header = records.next().ok_or(SeriesError::MissingHeader)??;
        for (index, expected) in CSV_HEADER.iter().enumerate() {
            match header.get(index) {
                Some(found) if found.trim() == *expected => {}
                Some(found) => return Err(SeriesError::Column { index, expected, found: found.to_string() }),
                None => return Err(SeriesError::ColumnCount(header.len())),
            }
        }
        if header.len() != CSV_HEADER.len() {
            return Err(SeriesError::ColumnCount(header.len()));
        }
        let mut series = TimeSeries::new();
        for (row, rec) in records.enumerate() {
            let rec = rec?;
            let mut x = [0.0; 46];
            for (i, column) in CSV_HEADER.iter().enumerate() {
                let field = rec.get(i).unwrap_or("");
                x[i] = field
                    .trim()
                    .parse()
                    .map_err(|_| SeriesError::Value { row: row + 1, column, value: field.to_string() })?;
            }
            series.push(Sample::from_values(&x));
        }
        Ok(series)
    }
}
