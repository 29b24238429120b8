//! Wire protocol shared by the edge and cloud services.
//!
//! A frame is a 4-byte big-endian body length followed by a UTF-8 body of
//! `key=value` lines in a fixed order. See `PROTOCOL.md` at the repository
//! root for the frozen field list and golden frames.

mod codec;
mod envelope;
mod normalize;
mod workflow;

pub use codec::{
    decode, decode_frame, encode, encode_frame, DecodeError, EncodeError, Frame, FrameDecoder, MAX_BATCH,
    MAX_FRAME_BODY,
};
pub use envelope::{DedupKey, EnvelopeError, PromptEnvelope, Stage, ERROR_PREFIX};
pub use normalize::{dedup_key, fnv1a64, normalize_for_dedup};
pub use workflow::{
    validate_workflow, Placement, WorkflowGraph, WorkflowNode, WorkflowViolation,
};
