//! Generators shared by the property tests and the acceptance run: random
//! signatures for the keccak oracle and static argument tuples with their
//! ethabi encodings.

use ethabi::{ParamType, Token};
use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

use intent_core::chaindata::abi::AbiValue;
use intent_core::chaindata::Address;

pub const ELEMENTARY: &[&str] = &[
    "address", "bool", "uint8", "uint32", "uint256", "int16", "int256", "bytes4", "bytes32", "string", "bytes",
    "uint256[]", "address[2]",
];

pub fn signature_text() -> impl Strategy<Value = String> {
    (
        "[a-zA-Z_][a-zA-Z0-9_]{0,15}",
        prop::collection::vec(prop::sample::select(ELEMENTARY), 0..6),
    )
        .prop_map(|(name, types)| format!("{name}({})", types.join(",")))
}

/// One static argument: its type for both sides, the ethabi token and the
/// value the decoder should produce.
#[derive(Debug, Clone)]
pub struct Arg {
    pub text: String,
    pub param: ParamType,
    pub token: Token,
    pub expected: AbiValue,
}

fn uint_arg() -> impl Strategy<Value = Arg> {
    (1usize..=32, any::<[u8; 32]>()).prop_map(|(bytes, mut raw)| {
        let bits = bytes * 8;
        for b in raw.iter_mut().take(32 - bytes) {
            *b = 0;
        }
        Arg {
            text: format!("uint{bits}"),
            param: ParamType::Uint(bits),
            token: Token::Uint(ethabi::Uint::from_big_endian(&raw)),
            expected: AbiValue::Uint(BigUint::from_bytes_be(&raw)),
        }
    })
}

fn int_arg() -> impl Strategy<Value = Arg> {
    (1usize..=16, any::<i128>()).prop_map(|(bytes, v)| {
        let bits = bytes * 8;
        // keep the value inside the declared width
        let v = if bits == 128 { v } else { v >> (128 - bits) };
        let mut raw = if v < 0 { [0xffu8; 32] } else { [0u8; 32] };
        raw[16..].copy_from_slice(&v.to_be_bytes());
        Arg {
            text: format!("int{bits}"),
            param: ParamType::Int(bits),
            token: Token::Int(ethabi::Uint::from_big_endian(&raw)),
            expected: AbiValue::Int(BigInt::from(v)),
        }
    })
}

pub fn static_arg() -> impl Strategy<Value = Arg> {
    let leaf = prop_oneof![
        any::<[u8; 20]>().prop_map(|a| Arg {
            text: "address".into(),
            param: ParamType::Address,
            token: Token::Address(ethabi::Address::from_slice(&a)),
            expected: AbiValue::Address(Address(a)),
        }),
        any::<bool>().prop_map(|b| Arg {
            text: "bool".into(),
            param: ParamType::Bool,
            token: Token::Bool(b),
            expected: AbiValue::Bool(b),
        }),
        uint_arg(),
        int_arg(),
        prop::collection::vec(any::<u8>(), 1..=32).prop_map(|v| Arg {
            text: format!("bytes{}", v.len()),
            param: ParamType::FixedBytes(v.len()),
            token: Token::FixedBytes(v.clone()),
            expected: AbiValue::FixedBytes(v),
        }),
    ];
    leaf.prop_flat_map(|first| {
        let template = first.clone();
        prop_oneof![
            Just(first),
            // a fixed-size array of the same static type
            (1usize..4).prop_map(move |k| Arg {
                text: format!("{}[{k}]", template.text),
                param: ParamType::FixedArray(Box::new(template.param.clone()), k),
                token: Token::FixedArray(vec![template.token.clone(); k]),
                expected: AbiValue::Array(vec![template.expected.clone(); k]),
            }),
        ]
    })
}
