use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::pose::Pose;

/// Orthonormality tolerance applied when reading pose files.
pub const POSE_FILE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PoseRecord {
    pub name: String,
    pub pose: Pose,
}

impl PoseRecord {
    pub fn new(name: impl Into<String>, pose: Pose) -> Self {
        PoseRecord {
            name: name.into(),
            pose,
        }
    }
}

/// Parses pose records; blank lines and `#` comments are skipped.
pub fn parse_poses(text: &str) -> Result<Vec<PoseRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let location = format!("line {}", lineno + 1);
        let mut fields = line.split_whitespace();
        let name = fields.next().unwrap_or_default().to_string();
        let nums: Vec<f64> = fields
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    location: location.clone(),
                    message: format!("not a number: {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if nums.len() != 12 {
            return Err(Error::Parse {
                location,
                message: format!("expected 12 numbers after the name, found {}", nums.len()),
            });
        }
        let r = Matrix3::from_row_slice(&nums[..9]);
        let t = Vector3::new(nums[9], nums[10], nums[11]);
        let pose = Pose::with_tolerance(r, t, POSE_FILE_TOLERANCE).map_err(|e| Error::Parse {
            location,
            message: e.to_string(),
        })?;
        out.push(PoseRecord { name, pose });
    }
    Ok(out)
}

pub fn format_poses(records: &[PoseRecord]) -> Result<String> {
    let mut s = String::from("# name r00 r01 r02 r10 r11 r12 r20 r21 r22 cx cy cz\n");
    for rec in records {
        if rec.name.is_empty() || rec.name.contains(char::is_whitespace) || rec.name.contains('#') {
            return Err(Error::InvalidArgument(format!(
                "pose name {:?} must be a non-empty token",
                rec.name
            )));
        }
        s.push_str(&rec.name);
        let r = rec.pose.rotation();
        for i in 0..3 {
            for j in 0..3 {
                write!(s, " {}", r[(i, j)]).unwrap();
            }
        }
        for x in rec.pose.translation().iter() {
            write!(s, " {x}").unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn read_pose_file(path: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    let bytes = read_bytes(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        location: path.as_ref().display().to_string(),
        message: "pose file is not UTF-8".into(),
    })?;
    parse_poses(&text)
}

pub fn write_pose_file(records: &[PoseRecord], path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), format_poses(records)?.as_bytes())
}
