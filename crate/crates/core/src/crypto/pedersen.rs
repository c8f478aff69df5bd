use super::group::{Element, GroupParams, Scalar};

/// `g^v · h^b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PedersenCommitment(pub Element);

impl PedersenCommitment {
    pub fn element(&self) -> &Element {
        &self.0
    }

    pub fn opens_to(&self, params: &GroupParams, v: &Scalar, b: &Scalar) -> bool {
        self.0 == params.gh_pow(v, b)
    }
}

pub fn pedersen_commit(params: &GroupParams, v: &Scalar, b: &Scalar) -> PedersenCommitment {
    PedersenCommitment(params.gh_pow(v, b))
}
