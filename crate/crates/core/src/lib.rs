pub mod clock;
pub mod extraction;
pub mod model;
pub mod organization;
pub mod pipeline;
pub mod providers;
pub mod retrieval;
pub mod storygen;
pub mod text;
pub mod validation;
pub mod wire;
