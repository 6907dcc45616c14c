//! COBOL sentence embeddings.
//!
//! Fixed-format COBOL is read into sentences, rewritten into an abstract
//! token form, and encoded by a bidirectional-LSTM sequence autoencoder with
//! attention. The latent vectors drive similarity search, clustering and
//! 2-D projection.

pub mod abstraction;
pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod frontend;
pub mod neural;
pub mod retrieval;
