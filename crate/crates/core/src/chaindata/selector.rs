use tiny_keccak::{Hasher, Keccak};

use super::abi::{Signature, SignatureError};
use super::types::{Selector, Word};

pub fn keccak256(data: &[u8]) -> [u8; 32] {
    let mut hasher = Keccak::v256();
    hasher.update(data);
    let mut out = [0u8; 32];
    hasher.finalize(&mut out);
    out
}

/// First four bytes of keccak-256 over canonical signature text.
pub fn compute_selector(signature: &str) -> Result<Selector, SignatureError> {
    Signature::parse_canonical(signature)?;
    Ok(selector_of_canonical(signature))
}

/// keccak-256 of canonical event text, i.e. the expected topic0.
pub fn compute_topic(signature: &str) -> Result<Word, SignatureError> {
    Signature::parse_canonical(signature)?;
    Ok(Word(keccak256(signature.as_bytes())))
}

pub(crate) fn selector_of_canonical(canonical: &str) -> Selector {
    let digest = keccak256(canonical.as_bytes());
    Selector([digest[0], digest[1], digest[2], digest[3]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erc20_selectors() {
        assert_eq!(compute_selector("transfer(address,uint256)").unwrap().to_string(), "0xa9059cbb");
        assert_eq!(compute_selector("approve(address,uint256)").unwrap().to_string(), "0x095ea7b3");
        assert!(compute_selector("").is_err());
        assert!(compute_selector("transfer(address to,uint256)").is_err());
    }

    #[test]
    fn transfer_topic() {
        assert_eq!(
            compute_topic("Transfer(address,address,uint256)").unwrap().to_string(),
            "0xddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef"
        );
    }
}
