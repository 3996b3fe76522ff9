use super::{CaptureError, CaptureRecord};

/// Turns an opaque capture byte stream into records.
pub trait CaptureCodec: Send + Sync {
    fn name(&self) -> &'static str;
    fn decode(&self, frames: &[u8]) -> Result<Vec<CaptureRecord>, CaptureError>;
    fn encode(&self, records: &[CaptureRecord]) -> Vec<u8>;
}

/// One JSON object per line; see the README for the field list.
#[derive(Debug, Clone, Copy, Default)]
pub struct JsonLines;

impl CaptureCodec for JsonLines {
    fn name(&self) -> &'static str {
        "jsonl"
    }

    fn decode(&self, frames: &[u8]) -> Result<Vec<CaptureRecord>, CaptureError> {
        let text = std::str::from_utf8(frames).map_err(|e| CaptureError::MalformedRecord {
            index: frames[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
            message: "capture is not UTF-8".into(),
        })?;
        text.lines()
            .filter(|line| !line.trim().is_empty())
            .enumerate()
            .map(|(index, line)| {
                serde_json::from_str(line).map_err(|e| CaptureError::MalformedRecord {
                    index,
                    message: e.to_string(),
                })
            })
            .collect()
    }

    fn encode(&self, records: &[CaptureRecord]) -> Vec<u8> {
        let mut out = Vec::new();
        for record in records {
            serde_json::to_writer(&mut out, record).expect("records serialize");
            out.push(b'\n');
        }
        out
    }
}

static CODECS: [&dyn CaptureCodec; 1] = [&JsonLines];

pub fn codecs() -> &'static [&'static dyn CaptureCodec] {
    &CODECS
}

pub fn codec(name: &str) -> Result<&'static dyn CaptureCodec, CaptureError> {
    codecs()
        .iter()
        .copied()
        .find(|c| c.name() == name)
        .ok_or_else(|| CaptureError::UnknownCodec(name.to_owned()))
}

/// Decodes `frames` with the codec registered as `codec_name`.
pub fn decode_adapter(frames: &[u8], codec_name: &str) -> Result<Vec<CaptureRecord>, CaptureError> {
    codec(codec_name)?.decode(frames)
}
