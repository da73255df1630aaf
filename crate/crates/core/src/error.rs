use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated input: needed {needed} more bytes at offset {offset}")]
    TruncatedFile { offset: usize, needed: usize },
    #[error("duplicate tensor name {0:?}")]
    DuplicateName(String),
    #[error("invalid tensor name")]
    EmptyName,
    #[error("shape mismatch for {name:?}: shape implies {expected} elements, found {found}")]
    ShapeMismatch { name: String, expected: usize, found: usize },
    #[error("tensor {0:?} is not f32")]
    WrongDtype(String),
    #[error("unknown dtype tag {0}")]
    UnknownDtype(u8),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid error bound: {0}")]
    InvalidBound(&'static str),
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("invalid codec spec: {0}")]
    InvalidSpec(&'static str),
    #[error("unknown codec id {0}")]
    UnknownCodec(u8),
    #[error("corrupt payload: {0}")]
    CorruptPayload(&'static str),
    #[error("corrupt lossless stream: {0}")]
    CorruptStream(&'static str),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("entry {name:?}: {source}")]
    Entry { name: String, source: Box<Error> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("compression never pays off: compressed size is not smaller than original")]
    NoBreakeven,
    #[error("no feasible candidate in selection grid")]
    NoFeasibleCandidate,
    #[error("no error bound satisfies the accuracy constraint")]
    NoFeasibleEpsilon,
    #[error("state dictionaries differ in structure: {0}")]
    StructureMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

impl Error {
    pub(crate) fn in_entry(self, name: &str) -> Self {
        Error::Entry { name: name.into(), source: Box::new(self) }
    }
}
