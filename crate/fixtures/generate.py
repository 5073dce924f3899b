#!/usr/bin/env python3
"""Regenerates the committed chain fixtures, desk dataset and mock scripts.

Requires `eth-abi` and `eth-hash[pycryptodome]`. The calldata, event topics and
log payloads are produced with those libraries so the fixtures stay independent
of the Rust decoder they are used to test.

    python3 fixtures/generate.py
"""

import json
import os
import random

from eth_abi import encode
from eth_hash.auto import keccak

ROOT = os.path.dirname(os.path.abspath(__file__))


def h(label: str) -> str:
    return "0x" + keccak(label.encode()).hex()


def addr(label: str) -> str:
    return "0x" + keccak(label.encode()).hex()[-40:]


def q(n: int) -> str:
    return hex(n)


def selector(sig: str) -> bytes:
    return keccak(sig.encode())[:4]


def topic(sig: str) -> str:
    return "0x" + keccak(sig.encode()).hex()


def word_addr(a: str) -> str:
    return "0x" + "0" * 24 + a[2:]


def word_uint(n: int) -> str:
    return "0x" + n.to_bytes(32, "big").hex()


def calldata(sig: str, types, args) -> str:
    return "0x" + (selector(sig) + encode(types, args)).hex()


def bloom(label: str) -> str:
    out = b""
    i = 0
    while len(out) < 256:
        out += keccak(f"{label}:bloom:{i}".encode())
        i += 1
    return "0x" + out[:256].hex()


USER = "0x8ba1f109551bd432803012645ac136ddd64dba72"
MASTERCHEF = "0xc2edad668740f1aa35e4d8f227fb8e17dca888cd"
SUSHI = "0x6b3595068778dd592e39a122f4f5a5cf09c90fe2"
SLP = "0x795065dcc9f64b5614c407a6efdc400da6221fb0"
WETH = "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2"
USDC = "0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48"
UNI_ROUTER = "0x7a250d5630b4cf539739df2c5dacb4c659f2488d"
SUSHI_ROUTER = "0xd9e1ce17f2641f24ae83637ab66a2cca9c378b9f"
USDC_WETH_PAIR = "0xb4e16d0168e52d35cacd2c6185b44281ec28c9dc"
GOVERNOR = "0xc0da02939e1441f497fd74f78ce7decb17b66529"

TRANSFER = "Transfer(address,address,uint256)"
APPROVAL = "Approval(address,address,uint256)"


def make_log(tx_hash, block, tx_index, block_hash, log_index, address, topics, data):
    return {
        "address": address,
        "topics": topics,
        "data": data,
        "blockNumber": q(block),
        "transactionHash": tx_hash,
        "transactionIndex": q(tx_index),
        "blockHash": block_hash,
        "logIndex": q(log_index),
        "removed": False,
    }


def make_fixture(label, frm, to, value, nonce, block, tx_index, gas, gas_used, gas_price,
                 input_hex, logs, trace, timestamp):
    """Builds a raw RPC capture: transaction, receipt, block header and optional callTracer frame."""
    tx_hash = h("fixture:" + label)
    block_hash = h(f"block:{block}")
    raw_logs = [
        make_log(tx_hash, block, tx_index, block_hash, i, *lg) for i, lg in enumerate(logs)
    ]
    tx = {
        "blockHash": block_hash,
        "blockNumber": q(block),
        "from": frm,
        "gas": q(gas),
        "gasPrice": q(gas_price),
        "maxFeePerGas": q(gas_price + 3_000_000_000),
        "maxPriorityFeePerGas": q(1_000_000_000),
        "hash": tx_hash,
        "input": input_hex,
        "nonce": q(nonce),
        "to": to,
        "transactionIndex": q(tx_index),
        "value": q(value),
        "type": "0x2",
        "accessList": [],
        "chainId": "0x1",
        "v": "0x1",
        "r": h(label + ":r"),
        "s": h(label + ":s"),
        "yParity": "0x1",
    }
    receipt = {
        "blockHash": block_hash,
        "blockNumber": q(block),
        "contractAddress": None,
        "cumulativeGasUsed": q(gas_used + 1_250_000),
        "effectiveGasPrice": q(gas_price),
        "from": frm,
        "gasUsed": q(gas_used),
        "logs": raw_logs,
        "logsBloom": bloom(label),
        "status": "0x1",
        "to": to,
        "transactionHash": tx_hash,
        "transactionIndex": q(tx_index),
        "type": "0x2",
    }
    header = {
        "number": q(block),
        "hash": block_hash,
        "parentHash": h(f"block:{block - 1}"),
        "timestamp": q(timestamp),
        "stateRoot": h(f"state:{block}"),
        "receiptsRoot": h(f"receipts:{block}"),
        "transactionsRoot": h(f"txs:{block}"),
        "logsBloom": bloom(f"block:{block}"),
        "miner": addr("builder"),
        "gasLimit": q(30_000_000),
        "gasUsed": q(14_100_000),
        "baseFeePerGas": q(gas_price - 1_000_000_000),
    }
    return tx_hash, {"transaction": tx, "receipt": receipt, "block": header, "trace": trace}


def frame(kind, frm, to, value, input_hex, gas, gas_used, calls=None, output="0x"):
    f = {
        "type": kind,
        "from": frm,
        "to": to,
        "value": q(value),
        "gas": q(gas),
        "gasUsed": q(gas_used),
        "input": input_hex,
        "output": output,
    }
    if calls:
        f["calls"] = calls
    return f


def write_json(path, obj):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Named fixtures used by unit, integration and acceptance tests.
# ---------------------------------------------------------------------------

chain = {}
named = {}

# LP staking in a MasterChef pool: the governance-token farming case.
lp_amount = 2_500_000_000_000_000_000
remaining_allowance = 7_500_000_000_000_000_000
deposit_input = calldata("deposit(uint256,uint256)", ["uint256", "uint256"], [12, lp_amount])
case_hash, case_fx = make_fixture(
    "case-study", USER, MASTERCHEF, 0, 57, 19_421_337, 88, 260_000, 171_402, 24_000_000_000,
    deposit_input,
    [
        (SLP, [topic(TRANSFER), word_addr(USER), word_addr(MASTERCHEF)], word_uint(lp_amount)),
        (SLP, [topic(APPROVAL), word_addr(USER), word_addr(MASTERCHEF)], word_uint(remaining_allowance)),
    ],
    frame("CALL", USER, MASTERCHEF, 0, deposit_input, 260_000, 171_402, calls=[
        frame("CALL", MASTERCHEF, SLP, 0,
              calldata("transferFrom(address,address,uint256)", ["address", "address", "uint256"],
                       [USER, MASTERCHEF, lp_amount]),
              230_000, 29_811, output=word_uint(1)),
    ]),
    1_710_806_400,
)
chain[case_hash] = case_fx
named["case_study"] = case_hash

# Plain native transfer; endpoint without trace support.
plain_hash, plain_fx = make_fixture(
    "plain-transfer", USER, addr("friend"), 500_000_000_000_000_000, 58, 19_421_400, 3, 21_000, 21_000,
    22_000_000_000, "0x", [], None, 1_710_807_200,
)
chain[plain_hash] = plain_fx
named["plain_transfer"] = plain_hash

# ERC-20 approval of a router.
approve_input = calldata("approve(address,uint256)", ["address", "uint256"], [UNI_ROUTER, 2**256 - 1])
approve_hash, approve_fx = make_fixture(
    "usdc-approve", USER, USDC, 0, 59, 19_421_512, 41, 60_000, 46_109, 23_500_000_000, approve_input,
    [(USDC, [topic(APPROVAL), word_addr(USER), word_addr(UNI_ROUTER)], word_uint(2**256 - 1))],
    frame("CALL", USER, USDC, 0, approve_input, 60_000, 46_109, output=word_uint(1)),
    1_710_808_600,
)
chain[approve_hash] = approve_fx
named["approve"] = approve_hash

# Uniswap V2 ETH -> USDC swap.
swap_value = 1_000_000_000_000_000_000
usdc_out = 3_012_450_000
swap_input = calldata(
    "swapExactETHForTokens(uint256,address[],address,uint256)",
    ["uint256", "address[]", "address", "uint256"],
    [2_990_000_000, [WETH, USDC], USER, 1_710_809_999],
)
swap_hash, swap_fx = make_fixture(
    "uniswap-swap", USER, UNI_ROUTER, swap_value, 60, 19_421_600, 12, 180_000, 118_317, 25_000_000_000,
    swap_input,
    [
        (WETH, [topic("Deposit(address,uint256)"), word_addr(UNI_ROUTER)], word_uint(swap_value)),
        (WETH, [topic(TRANSFER), word_addr(UNI_ROUTER), word_addr(USDC_WETH_PAIR)], word_uint(swap_value)),
        (USDC, [topic(TRANSFER), word_addr(USDC_WETH_PAIR), word_addr(USER)], word_uint(usdc_out)),
        (USDC_WETH_PAIR, [topic("Sync(uint112,uint112)")],
         "0x" + encode(["uint112", "uint112"], [41_220_118_004_551, 13_702_440_118_221_773_000_000]).hex()),
        (USDC_WETH_PAIR,
         [topic("Swap(address,uint256,uint256,uint256,uint256,address)"), word_addr(UNI_ROUTER), word_addr(USER)],
         "0x" + encode(["uint256"] * 4, [0, swap_value, usdc_out, 0]).hex()),
    ],
    frame("CALL", USER, UNI_ROUTER, swap_value, swap_input, 180_000, 118_317, calls=[
        frame("CALL", UNI_ROUTER, WETH, swap_value, "0x" + selector("deposit()").hex(), 150_000, 23_974),
        frame("CALL", UNI_ROUTER, WETH, 0,
              calldata("transfer(address,uint256)", ["address", "uint256"], [USDC_WETH_PAIR, swap_value]),
              120_000, 8_062, output=word_uint(1)),
        frame("CALL", UNI_ROUTER, USDC_WETH_PAIR, 0,
              calldata("swap(uint256,uint256,address,bytes)", ["uint256", "uint256", "address", "bytes"],
                       [usdc_out, 0, USER, b""]),
              100_000, 60_231),
    ]),
    1_710_810_000,
)
chain[swap_hash] = swap_fx
named["swap"] = swap_hash

# Governor Bravo vote with a reason string (dynamic event data).
vote_input = calldata("castVoteWithReason(uint256,uint8,string)", ["uint256", "uint8", "string"],
                      [231, 1, "supports the treasury diversification proposal"])
vote_hash, vote_fx = make_fixture(
    "governance-vote", USER, GOVERNOR, 0, 61, 19_422_000, 77, 120_000, 84_506, 21_000_000_000, vote_input,
    [(GOVERNOR, [topic("VoteCast(address,uint256,uint8,uint256,string)"), word_addr(USER)],
      "0x" + encode(["uint256", "uint8", "uint256", "string"],
                    [231, 1, 18_500_000_000_000_000_000_000, "supports the treasury diversification proposal"]).hex())],
    frame("CALL", USER, GOVERNOR, 0, vote_input, 120_000, 84_506),
    1_710_815_000,
)
chain[vote_hash] = vote_fx
named["vote"] = vote_hash

# Call into an unknown selector with an unknown event.
mystery_input = "0xdeadbeef" + encode(["uint256", "address"], [42, USER]).hex()
mystery_hash, mystery_fx = make_fixture(
    "unknown-selector", USER, addr("mystery-contract"), 0, 62, 19_422_100, 5, 90_000, 52_001, 20_000_000_000,
    mystery_input,
    [(addr("mystery-contract"), [topic("Poked(uint256)"), word_uint(42)], "0x" + encode(["uint256"], [7]).hex())],
    frame("CALL", USER, addr("mystery-contract"), 0, mystery_input, 90_000, 52_001),
    1_710_816_000,
)
chain[mystery_hash] = mystery_fx
named["unknown_selector"] = mystery_hash

# Earlier and later transactions of the case-study user, referenced from the history fixture.
add_liq_input = calldata(
    "addLiquidityETH(address,uint256,uint256,uint256,address,uint256)",
    ["address", "uint256", "uint256", "uint256", "address", "uint256"],
    [SUSHI, 2_000_000_000_000_000_000_000, 1_990_000_000_000_000_000_000, 990_000_000_000_000_000, USER, 1_710_700_000],
)
addliq_hash, addliq_fx = make_fixture(
    "case-study-add-liquidity", USER, SUSHI_ROUTER, 1_000_000_000_000_000_000, 56, 19_420_900, 17, 250_000,
    190_552, 26_000_000_000, add_liq_input,
    [
        (SUSHI, [topic(TRANSFER), word_addr(USER), word_addr(SLP)], word_uint(2_000_000_000_000_000_000_000)),
        (SLP, [topic(TRANSFER), "0x" + "0" * 64, word_addr(USER)], word_uint(lp_amount)),
    ],
    None,
    1_710_701_000,
)
chain[addliq_hash] = addliq_fx
named["case_study_add_liquidity"] = addliq_hash

sell_input = calldata(
    "swapExactTokensForETH(uint256,uint256,address[],address,uint256)",
    ["uint256", "uint256", "address[]", "address", "uint256"],
    [310_000_000_000_000_000_000, 160_000_000_000_000_000, [SUSHI, WETH], USER, 1_711_000_000],
)
sell_hash, sell_fx = make_fixture(
    "case-study-sell", USER, SUSHI_ROUTER, 0, 63, 19_440_010, 9, 200_000, 121_774, 24_500_000_000, sell_input,
    [
        (SUSHI, [topic(TRANSFER), word_addr(USER), word_addr(SLP)], word_uint(310_000_000_000_000_000_000)),
        (WETH, [topic("Withdrawal(address,uint256)"), word_addr(SUSHI_ROUTER)], word_uint(164_000_000_000_000_000)),
    ],
    None,
    1_710_999_000,
)
chain[sell_hash] = sell_fx
named["case_study_sell"] = sell_hash

# ---------------------------------------------------------------------------
# Desk dataset: one transaction per (protocol, function) source, labelled with a
# fixed function -> intent mapping that is recorded in the dataset notes.
# ---------------------------------------------------------------------------

CONTRACTS = {
    "Aave": "0x7d2768de32b0b80b7a3454c06bdac94a69ddc7a9",
    "AaveStake": "0x4da27a545c0c5b758a6ba100e3a049001de870f5",
    "Azuki": "0xed5af388653567af2f388e6224dc7c4b3241c544",
    "Compound": "0xc3d688b66703497daa19211eedff47f25384cdc3",
    "CompToken": "0xc00e94cb662c3520282e6f5717214004a7f26888",
    "CurveVE": "0x5f3b5dfeb7b28cdbd7faba78963ee202a494e2a2",
    "dYdX": "0x639192d54431f8c816368d3fb4107bc168d0e871",
    "ENS": "0xc18360217d8f7ab5e7c516566761ea12ce7f9d72",
    "CRV": "0xd533a949740bb3306d119cc777fa900ba034cd52",
    "DAI": "0x6b175474e89094c44da98b954eedeac495271d0f",
    "USDT": "0xdac17f958d2ee523a2206206994597c13d831ec7",
    "USDC": USDC,
    "WBTC": "0x2260fac5e5542a773aa44fbcfedf7c193bc2c599",
    "WETH": WETH,
    "SafeFactory": "0xa6b71e26c5e0845f74c812102ca7114b6a896ab2",
    "Safe": addr("user-safe"),
    "Harvest": "0xab7fa2b2985bccfc13c6d86b1d5a17486ab1e04c",
    "Lido": "0xae7ab96520de3a18e5e111b5eaab095312d7fe84",
    "MakerVat": "0x35d1b3f3d7966a1dfe207aa4514c12a259a0492b",
    "MakerJoin": "0x2f0b23f53734252bda2277357e97e1517d6b042a",
    "Multicall3": "0xca11bde05977b3631167028862be2a173976ca11",
    "Nexus": "0x84edffa16bb0b9ab1163abb0a13ff0744c11272f",
    "Rocket": "0xdd3f50f8a6cafbe9b31a427582963f465e745af8",
    "SushiRouter": SUSHI_ROUTER,
    "Swell": "0xf951e335afb289353dc249e82926178eac7ded78",
    "UniRouter": UNI_ROUTER,
    "UniDistributor": "0x090d4613473dee047c3f2706764f49e0821d256e",
    "UNI": "0x1f9840a85d5af5bf1d1762f925bdaddc4201f984",
    "Yearn": "0xa354f35829ae975e850e23e9615b11da1b3dc4de",
    "Governor": GOVERNOR,
}

rng = random.Random(20250301)


def rand_addr():
    return "0x" + bytes(rng.getrandbits(8) for _ in range(20)).hex()


def amt():
    return rng.randrange(10**15, 10**21)


# (protocol key, canonical signature, types, argument factory, intents, emitted logs)
SOURCES = [
    ("UniRouter", "swapExactETHForTokens(uint256,address[],address,uint256)",
     ["uint256", "address[]", "address", "uint256"],
     lambda u: [amt(), [WETH, CONTRACTS["UNI"]], u, 1_711_000_000], ["A1"], "transfer"),
    ("SushiRouter", "swapExactTokensForETH(uint256,uint256,address[],address,uint256)",
     ["uint256", "uint256", "address[]", "address", "uint256"],
     lambda u: [amt(), amt(), [SUSHI, WETH], u, 1_711_000_000], ["A1"], "transfer"),
    ("UniRouter", "swapETHForExactTokens(uint256,address[],address,uint256)",
     ["uint256", "address[]", "address", "uint256"],
     lambda u: [amt(), [WETH, USDC], u, 1_711_000_000], ["A1"], "transfer"),
    ("SushiRouter", "swapExactETHForTokens(uint256,address[],address,uint256)",
     ["uint256", "address[]", "address", "uint256"],
     lambda u: [amt(), [WETH, SUSHI], u, 1_711_000_000], ["A1"], "transfer"),
    ("Aave", "flashLoan(address,address[],uint256[],uint256[],address,bytes,uint16)",
     ["address", "address[]", "uint256[]", "uint256[]", "address", "bytes", "uint16"],
     lambda u: [u, [USDC], [amt()], [0], u, b"\x01\x02", 0], ["A4"], "transfer"),
    ("Multicall3", "aggregate3((address,bool,bytes)[])", ["(address,bool,bytes)[]"],
     lambda u: [[(UNI_ROUTER, False, b"\x7f\xf3\x6a\xb5"), (SUSHI_ROUTER, False, b"\x18\xcb\xaf\xe5")]], ["A4"], "transfer"),
    ("Aave", "borrow(address,uint256,uint256,uint16,address)",
     ["address", "uint256", "uint256", "uint16", "address"],
     lambda u: [USDC, amt(), 2, 0, u], ["A6", "A2"], "transfer"),
    ("Aave", "repay(address,uint256,uint256,address)", ["address", "uint256", "uint256", "address"],
     lambda u: [USDC, amt(), 2, u], ["A6"], "transfer"),
    ("Compound", "supply(address,uint256)", ["address", "uint256"],
     lambda u: [WETH, amt()], ["A6"], "transfer"),
    ("Compound", "withdraw(address,uint256)", ["address", "uint256"],
     lambda u: [WETH, amt()], ["A6"], "transfer"),
    ("MakerVat", "frob(bytes32,address,address,address,int256,int256)",
     ["bytes32", "address", "address", "address", "int256", "int256"],
     lambda u: [b"ETH-A".ljust(32, b"\0"), u, u, u, amt(), amt() // 2], ["A6", "A2"], None),
    ("MakerJoin", "join(address,uint256)", ["address", "uint256"],
     lambda u: [u, amt()], ["A6"], "transfer"),
    ("AaveStake", "stake(address,uint256)", ["address", "uint256"],
     lambda u: [u, amt()], ["A9"], "transfer"),
    ("CurveVE", "create_lock(uint256,uint256)", ["uint256", "uint256"],
     lambda u: [amt(), 1_830_000_000], ["A9"], "transfer"),
    ("Azuki", "allowlistMint()", [], lambda u: [], ["A12"], None),
    ("CompToken", "delegateBySig(address,uint256,uint256,uint8,bytes32,bytes32)",
     ["address", "uint256", "uint256", "uint8", "bytes32", "bytes32"],
     lambda u: [u, 3, 1_712_000_000, 27, b"\x11" * 32, b"\x22" * 32], ["A20"], "delegate"),
    ("ENS", "delegate(address)", ["address"], lambda u: [rand_addr()], ["A20"], "delegate"),
    ("UNI", "delegate(address)", ["address"], lambda u: [u], ["A20"], "delegate"),
    ("Governor", "castVote(uint256,uint8)", ["uint256", "uint8"], lambda u: [231, 1], ["A18"], None),
    ("Governor", "propose(address[],uint256[],string[],bytes[],string)",
     ["address[]", "uint256[]", "string[]", "bytes[]", "string"],
     lambda u: [[CONTRACTS["CompToken"]], [0], ["_setPendingAdmin(address)"], [b"\x00" * 32],
                "# Migrate admin\nTransfer admin rights to the new timelock."], ["A19"], None),
    ("CRV", "approve(address,uint256)", ["address", "uint256"], lambda u: [rand_addr(), amt()], ["A14"], "approval"),
    ("DAI", "approve(address,uint256)", ["address", "uint256"], lambda u: [rand_addr(), 0], ["A14"], "approval"),
    ("USDT", "approve(address,uint256)", ["address", "uint256"], lambda u: [rand_addr(), amt()], ["A14"], "approval"),
    ("USDC", "approve(address,uint256)", ["address", "uint256"], lambda u: [rand_addr(), 0], ["A14"], "approval"),
    ("WBTC", "approve(address,uint256)", ["address", "uint256"], lambda u: [rand_addr(), 0], ["A14"], "approval"),
    ("WETH", "approve(address,uint256)", ["address", "uint256"], lambda u: [rand_addr(), amt()], ["A14"], "approval"),
    ("WBTC", "transfer(address,uint256)", ["address", "uint256"], lambda u: [rand_addr(), amt()], ["A3"], "transfer"),
    ("SafeFactory", "createProxy(address,bytes)", ["address", "bytes"],
     lambda u: [addr("safe-singleton"), b"\xb6\x3e\x80\x0d" + b"\x00" * 60], ["A13"], None),
    ("Safe", "execTransaction(address,uint256,bytes,uint8,uint256,uint256,uint256,address,address,bytes)",
     ["address", "uint256", "bytes", "uint8", "uint256", "uint256", "uint256", "address", "address", "bytes"],
     lambda u: [rand_addr(), amt(), b"", 0, 0, 0, 0, "0x" + "0" * 40, "0x" + "0" * 40, b"\x33" * 65], ["A13"], None),
    ("Harvest", "deposit(uint256)", ["uint256"], lambda u: [amt()], ["A7"], "transfer"),
    ("Harvest", "withdraw(uint256)", ["uint256"], lambda u: [amt()], ["A7"], "transfer"),
    ("Harvest", "announceStrategyUpdate(address)", ["address"], lambda u: [rand_addr()], ["A7"], None),
    ("Yearn", "deposit(uint256)", ["uint256"], lambda u: [amt()], ["A7"], "transfer"),
    ("Yearn", "withdraw(uint256)", ["uint256"], lambda u: [amt()], ["A7"], "transfer"),
    ("Lido", "submit(address)", ["address"], lambda u: ["0x" + "0" * 40], ["A8"], "transfer"),
    ("Rocket", "deposit()", [], lambda u: [], ["A8"], "transfer"),
    ("Swell", "deposit()", [], lambda u: [], ["A8"], "transfer"),
    ("Nexus", "buyCover(address,address,uint256,uint16,uint8,bytes)",
     ["address", "address", "uint256", "uint16", "uint8", "bytes"],
     lambda u: [CONTRACTS["Aave"], "0xeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeee", amt(), 90, 1, b"\x44" * 96], ["A15"], None),
    ("SushiRouter", "addLiquidity(address,address,uint256,uint256,uint256,uint256,address,uint256)",
     ["address", "address", "uint256", "uint256", "uint256", "uint256", "address", "uint256"],
     lambda u: [SUSHI, WETH, amt(), amt(), 0, 0, u, 1_711_000_000], ["A5"], "transfer"),
    ("UniRouter", "removeLiquidity(address,address,uint256,uint256,uint256,address,uint256)",
     ["address", "address", "uint256", "uint256", "uint256", "address", "uint256"],
     lambda u: [USDC, WETH, amt(), 0, 0, u, 1_711_000_000], ["A5"], "transfer"),
    ("UniDistributor", "claim(uint256,address,uint256,bytes32[])", ["uint256", "address", "uint256", "bytes32[]"],
     lambda u: [rng.randrange(1, 250_000), u, 400 * 10**18, [b"\x55" * 32, b"\x66" * 32]], ["A11"], "transfer"),
    ("dYdX", "claimRewards(address)", ["address"], lambda u: [u], ["A11"], "transfer"),
    ("UniRouter", "swapExactETHForTokens(uint256,address[],address,uint256)",
     ["uint256", "address[]", "address", "uint256"],
     lambda u: [amt(), [WETH, CONTRACTS["UNI"]], u, 1_711_000_000], ["A1", "A3"], "transfer"),
]

dataset = []
dataset_txs = []
for i, (proto, sig, types, mk, intents, log_kind) in enumerate(SOURCES):
    user = rand_addr()
    to = CONTRACTS[proto]
    args = mk(user)
    data = calldata(sig, types, args)
    value = amt() if sig.startswith(("swapExactETH", "swapETH", "deposit()", "submit")) else 0
    logs = []
    if log_kind == "transfer":
        logs.append((to, [topic(TRANSFER), word_addr(user), word_addr(rand_addr())], word_uint(amt())))
    elif log_kind == "approval":
        spender, allowance = args
        logs.append((to, [topic(APPROVAL), word_addr(user), word_addr(spender)], word_uint(allowance)))
    elif log_kind == "delegate":
        logs.append((to, [topic("DelegateChanged(address,address,address)"), word_addr(user),
                          word_addr("0x" + "0" * 40), word_addr(rand_addr())], "0x"))
    trace = None
    if i % 2 == 0:
        trace = frame("CALL", user, to, value, data, 400_000, 90_000 + i * 1_000)
    label = f"desk-{i:02d}"
    tx_hash, fx = make_fixture(label, user, to, value, rng.randrange(0, 900), 19_000_000 + i * 977, i % 150,
                               400_000, 90_000 + i * 1_000, 20_000_000_000 + i * 100_000_000, data, logs, trace,
                               1_700_000_000 + i * 86_400)
    chain[tx_hash] = fx
    dataset.append({"tx_hash": tx_hash, "labels": intents,
                    "note": f"synthetic: {proto} {sig.split('(')[0]} -> {'+'.join(intents)}"})
    dataset_txs.append((tx_hash, intents, sig))

for tx_hash, fx in chain.items():
    write_json(os.path.join(ROOT, "chain", tx_hash + ".json"), fx)

os.makedirs(os.path.join(ROOT, "dataset"), exist_ok=True)
with open(os.path.join(ROOT, "dataset", "desk.jsonl"), "w") as fh:
    for row in dataset:
        fh.write(json.dumps(row) + "\n")

write_json(os.path.join(ROOT, "named.json"), named)

# ---------------------------------------------------------------------------
# Off-chain fixtures: prices, address history, web pages.
# ---------------------------------------------------------------------------

write_json(os.path.join(ROOT, "prices.json"), {
    "quotes": [
        {"symbol": "WETH", "address": WETH, "price": "3000.00", "currency": "USD", "as_of": 1710806400},
        {"symbol": "WETH", "address": WETH, "price": "3512.40", "currency": "USD", "as_of": 1710979200},
        {"symbol": "SUSHI", "address": SUSHI, "price": "1.87", "currency": "USD", "as_of": 1710806400},
        {"symbol": "SUSHI", "address": SUSHI, "price": "1.52", "currency": "USD", "as_of": 1710979200},
        {"symbol": "USDC", "address": USDC, "price": "1.00", "currency": "USD", "as_of": 1710806400},
    ]
})


def hist(tx_hash, fx, method):
    tx = fx["transaction"]
    return {
        "hash": tx_hash,
        "block_number": int(tx["blockNumber"], 16),
        "from": tx["from"],
        "to": tx["to"],
        "value": str(int(tx["value"], 16)),
        "method": method,
    }


write_json(os.path.join(ROOT, "history.json"), {
    "addresses": {
        USER: [
            hist(addliq_hash, addliq_fx, "addLiquidityETH"),
            hist(case_hash, case_fx, "deposit"),
            hist(sell_hash, sell_fx, "swapExactTokensForETH"),
        ],
        addr("friend"): [hist(plain_hash, plain_fx, "")],
    }
})

os.makedirs(os.path.join(ROOT, "web"), exist_ok=True)
with open(os.path.join(ROOT, "web", "masterchef.html"), "w") as fh:
    fh.write("""<!DOCTYPE html>
<html>
<head><title>MasterChef</title><style>body { font-family: sans-serif; }</style>
<script>window.analytics = { track: function () { return "tracking-pixel"; } };</script></head>
<body>
<nav><a href="/">Home</a> <a href="/docs">Docs</a></nav>
<h1>MasterChef</h1>
<p>MasterChef distributes SUSHI rewards to liquidity providers who stake their SushiSwap LP tokens.</p>
<p>Depositing LP tokens into a pool with <code>deposit(pid, amount)</code> starts accruing SUSHI, the governance
token of the protocol. Pending rewards are harvested on every deposit or withdrawal.</p>
<script type="text/javascript">console.log("should never reach the model");</script>
<footer>Copyright Sushi</footer>
</body>
</html>
""")
with open(os.path.join(ROOT, "web", "empty.html"), "w") as fh:
    fh.write("<html><head><title>empty</title></head><body></body></html>\n")
write_json(os.path.join(ROOT, "web", "index.json"), {
    "pages": {
        "https://docs.sushi.com/docs/Products/Classic%20AMM/MasterChef": "masterchef.html",
        "https://example.org/empty": "empty.html",
    }
})

# ---------------------------------------------------------------------------
# Mock scripts.
# ---------------------------------------------------------------------------

CANONICAL = ["Smart Contract Analysis", "Temporal Context Analysis", "Market Dynamics Analysis"]


def entry(match, response, repeat=False):
    e = {"match": match, "response": response}
    if repeat:
        e["repeat"] = True
    return e


def js(obj):
    return json.dumps(obj)


def plan_response(names):
    return "Here is the analysis plan.\n```json\n" + js({"perspectives": [
        {"name": n, "rationale": f"{n} is needed to explain the transaction.",
         "prompt_seed": f"Analyse the transaction from the {n.lower()} angle."} for n in names
    ]}) + "\n```"


def questions_response(objective, todo, questions):
    return js({"plan": {"objectives": objective, "todo_items": todo,
                        "prompts": "Answer factually, cite tool evidence, keep numbers exact."},
               "questions": questions})


def report_response(narrative, candidates):
    return js({"narrative": narrative, "candidates": [
        {"intent": c, "justification": j, "evidence": ev} for c, j, ev in candidates
    ]})


def qs(p, qi, step):
    return f"[task=QS][perspective={p}][question={qi}][step={step}]"


def de(p, stage):
    return f"[task=DE][perspective={p}][stage={stage}]"


def direct(p, step):
    return f"[task=QS][perspective={p}][mode=direct][step={step}]"


SC, TC, MD = CANONICAL
case = [entry("[task=MP][stage=plan]", plan_response(CANONICAL))]

case += [
    entry(de(SC, "questions"), questions_response(
        "Identify the contracts and methods invoked and their effect on the user's holdings.",
        ["decode the call", "resolve the selector", "trace token movements"],
        ["Which smart contracts are being interacted with?",
         "Which methods are called and with which arguments?",
         "What are the effects of these methods on the user's assets?"])),
    entry(qs(SC, 1, 1), f"Thought: the target is {MASTERCHEF}; check the selector.\nACTION: sig_lookup({js({'selector': '0xe2bbb158'})})"),
    entry(qs(SC, 1, 2), "Thought: the selector resolves to a MasterChef pool deposit.\nFINAL: The user interacts with the SushiSwap MasterChef contract and the SUSHI/WETH SLP token."),
    entry(qs(SC, 2, 1), f"ACTION: tx_fetch({js({'tx_hash': case_hash})})"),
    entry(qs(SC, 2, 2), "FINAL: deposit(pid=12, amount=2500000000000000000) moves 2.5 SLP LP tokens into pool 12."),
    entry(qs(SC, 3, 1), "FINAL: LP tokens leave the wallet and start accruing SUSHI governance-token rewards; the remaining allowance is 7.5 SLP."),
    entry(de(SC, "report"), report_response(
        "The user staked SUSHI/WETH liquidity-provider tokens in MasterChef to farm SUSHI.",
        [("A9", "Staking into MasterChef earns the SUSHI governance token.", [1, 2]),
         ("A5", "The staked asset is an LP position in the SUSHI/WETH pool.", [2])])),
]

case += [
    entry(de(TC, "questions"), questions_response(
        "Place the transaction in the user's recent activity.",
        ["pull address history", "inspect related transactions"],
        ["What did the user do before this transaction?",
         "How was the staked LP position created?",
         "What did the user do afterwards?"])),
    entry(qs(TC, 1, 1), f"ACTION: address_history({js({'address': USER, 'limit': 20})})"),
    entry(qs(TC, 1, 2), "FINAL: Three transactions: addLiquidityETH, this deposit, then swapExactTokensForETH selling SUSHI."),
    entry(qs(TC, 2, 1), f"ACTION: tx_fetch({js({'tx_hash': addliq_hash})})"),
    entry(qs(TC, 2, 2), "FINAL: The LP tokens were minted by addLiquidityETH with 2000 SUSHI and 1 ETH a few blocks earlier."),
    entry(qs(TC, 3, 1), f"ACTION: tx_fetch({js({'tx_hash': sell_hash})})"),
    entry(qs(TC, 3, 2), "FINAL: Later the user sold 310 SUSHI for ETH through the SushiSwap router."),
    entry(de(TC, "report"), report_response(
        "History shows liquidity provision, LP staking, then selling harvested SUSHI.",
        [("A5", "addLiquidityETH created the staked LP position.", [2]),
         ("A1", "Harvested SUSHI was sold shortly after for ETH.", [3])])),
]

case += [
    entry(de(MD, "questions"), questions_response(
        "Relate the transaction to market conditions for SUSHI and ETH.",
        ["look up SUSHI and WETH prices", "read the MasterChef documentation"],
        ["What were SUSHI and ETH prices around the transaction?",
         "What does the MasterChef program pay to stakers?",
         "Do market moves explain the later sale?"])),
    entry(qs(MD, 1, 1), f"ACTION: price_lookup({js({'asset': 'SUSHI', 'timestamp': 1710806400})})"),
    entry(qs(MD, 1, 2), f"ACTION: price_lookup({js({'asset': 'WETH', 'timestamp': 1710806400})})"),
    entry(qs(MD, 1, 3), "FINAL: SUSHI traded at 1.87 USD and WETH at 3000.00 USD at the time."),
    entry(qs(MD, 2, 1), f"ACTION: web_fetch({js({'url': 'https://docs.sushi.com/docs/Products/Classic%20AMM/MasterChef'})})"),
    entry(qs(MD, 2, 2), "FINAL: MasterChef pays SUSHI governance-token rewards to LP stakers."),
    entry(qs(MD, 3, 1), f"ACTION: price_lookup({js({'asset': 'SUSHI', 'timestamp': 1710999000})})"),
    entry(qs(MD, 3, 2), "FINAL: SUSHI fell to 1.52 USD before the sale, consistent with taking profit on farmed rewards."),
    entry(de(MD, "report"), report_response(
        "Market data supports farming SUSHI rewards and selling them as spot trades.",
        [("A9", "Rewards are paid in the SUSHI governance token.", [2]),
         ("A1", "Farmed SUSHI was sold into the market.", [1, 3]),
         ("A4", "Price gaps could suggest arbitrage.", [])])),
]

case.append(entry("[task=CE][stage=evaluate]", js({"scores": [
    {"intent": "A9", "verifiability": 0.9, "relevance": 0.9,
     "reason": "MasterChef deposit and reward token documented by two perspectives."},
    {"intent": "A5", "verifiability": 0.85, "relevance": 0.8,
     "reason": "addLiquidityETH in history created the staked LP position."},
    {"intent": "A1", "verifiability": 0.7, "relevance": 0.75,
     "reason": "Subsequent swapExactTokensForETH sells the farmed SUSHI."},
    {"intent": "A4", "verifiability": 0.2, "relevance": 0.3,
     "reason": "No paired buy and sell within the transaction; arbitrage unsupported."},
]})))

# Ablation-only entries; unused in the full pipeline.
for p, cands in [(SC, [("A9", "MasterChef staking earns SUSHI.", []), ("A5", "Staked asset is an LP token.", [])]),
                 (TC, [("A5", "Earlier addLiquidityETH.", []), ("A1", "Later SUSHI sale.", [])]),
                 (MD, [("A9", "SUSHI rewards.", []), ("A1", "SUSHI sold into the market.", [])])]:
    case.append(entry(de(p, "answers"), js({"answers": [
        "The transaction calls MasterChef deposit on pool 12.",
        "The LP position was created earlier by providing SUSHI/ETH liquidity.",
        "Rewards accrue in SUSHI, later partially sold."]})))
    case.append(entry(direct(p, 1), "FINAL: " + report_response(f"Direct {p.lower()} without decomposition.", cands)))

write_json(os.path.join(ROOT, "scripts", "case_study.json"), case)

# Hallucination firewall: DE and CE emit labels outside the taxonomy.
halluc = [entry("[task=MP][stage=plan]", plan_response(CANONICAL))]
for p in CANONICAL:
    halluc.append(entry(de(p, "questions"), questions_response(
        "Check the call.", ["decode"], ["What is called?", "Who receives tokens?", "Why?"])))
    for qi in (1, 2, 3):
        halluc.append(entry(qs(p, qi, 1), "FINAL: The user deposits LP tokens into MasterChef."))
    halluc.append(entry(de(p, "report"), report_response("Mixed findings.", [
        ("A9", "Staking LP tokens into MasterChef.", []),
        ("A22", "Invented label.", []),
        ("Wash Trading", "Not part of the taxonomy.", []),
    ])))
halluc.append(entry("[task=CE][stage=evaluate]", js({"scores": [
    {"intent": "A9", "verifiability": 0.8, "relevance": 0.9, "reason": "Deposit is on-chain."},
    {"intent": "A22", "verifiability": 0.9, "relevance": 0.9, "reason": "Invented."},
    {"intent": "Wash Trading", "verifiability": 0.9, "relevance": 0.9, "reason": "Invented."},
]})))
write_json(os.path.join(ROOT, "scripts", "hallucination.json"), halluc)

# Plain ETH transfer: generic, reusable entries.
plain = [
    entry("[task=MP][stage=plan]", plan_response(CANONICAL)),
    entry("[stage=questions]", questions_response(
        "Explain a native transfer.", ["check value", "check counterparty"],
        ["Who sent ETH to whom?", "How much ETH moved?", "Is the counterparty a contract?"]), repeat=True),
    entry("[task=QS]", "FINAL: A native ETH transfer of 0.5 ETH between two externally owned accounts.", repeat=True),
    entry("[stage=report]", report_response("Native ETH moved to another wallet.",
                                            [("A3", "Moving ETH to a separate holding wallet.", [])]), repeat=True),
    entry("[task=CE][stage=evaluate]", js({"scores": [
        {"intent": "A3", "verifiability": 0.4, "relevance": 0.5, "reason": "Only a value transfer is visible."}]})),
]
write_json(os.path.join(ROOT, "scripts", "plain_transfer.json"), plain)

# Desk benchmark: generic planning and solving, per-transaction reports and scores.
bench = [
    entry("[task=MP][stage=plan]", plan_response(CANONICAL), repeat=True),
    entry("[stage=questions]", questions_response(
        "Explain the call.", ["decode", "classify"],
        ["Which contract and method are called?", "What assets move?", "What does the user gain?"]), repeat=True),
    entry("[stage=answers]", js({"answers": ["Decoded from the call.", "See events.", "See call semantics."]}), repeat=True),
    entry(["[task=QS]", "[question="], "FINAL: The decoded call and events describe the operation.", repeat=True),
]
ALL = [f"A{i}" for i in range(1, 22)]
for i, (tx_hash, intents, sig) in enumerate(dataset_txs):
    cands = list(intents)
    # deterministic noise so the table is not trivially perfect
    if i % 4 == 1:
        cands.append("A1" if "A1" not in cands else "A4")
    if i % 5 == 3 and len(cands) > 1:
        cands = cands[:1]
    spurious = ALL[(i * 7) % 21]
    if spurious in cands:
        spurious = ALL[(i * 7 + 1) % 21]
    rep = [(c, f"{sig.split('(')[0]} supports {c}.", []) for c in cands]
    rep.append((spurious, "Weak signal.", []))
    bench.append(entry(["[stage=report]", tx_hash], report_response(f"Analysis of {sig.split('(')[0]}.", rep), repeat=True))
    direct_rep = report_response(f"Direct analysis of {sig.split('(')[0]}.", rep)
    bench.append(entry(["[mode=direct]", tx_hash], "FINAL: " + direct_rep, repeat=True))
    scores = [{"intent": c, "verifiability": 0.8, "relevance": 0.8, "reason": "Backed by the decoded call."} for c in cands]
    scores.append({"intent": spurious, "verifiability": 0.3 if i % 6 else 0.7, "relevance": 0.4 if i % 6 else 0.6,
                   "reason": "Weakly related."})
    bench.append(entry(["[task=CE]", tx_hash], js({"scores": scores}), repeat=True))
write_json(os.path.join(ROOT, "scripts", "desk_benchmark.json"), bench)

print(f"wrote {len(chain)} chain fixtures, {len(dataset)} dataset rows")
