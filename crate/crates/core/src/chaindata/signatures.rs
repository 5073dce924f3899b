//! Function and event signature resolution.
//!
//! Resolution order: per-contract ABI registry, the embedded table, then an
//! optional remote directory. Remote failures only cost candidates.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use serde::Deserialize;

use super::abi::Signature;
use super::selector::{keccak256, selector_of_canonical};
use super::types::{Address, Selector, Word};
use super::ChainError;

/// Functions behind the protocol sources of the desk dataset, plus the
/// router, token and governance calls they fan out into.
const LOCAL_FUNCTIONS: &[&str] = &[
    // ERC-20 / ERC-721
    "transfer(address to,uint256 value)",
    "transferFrom(address from,address to,uint256 value)",
    "approve(address spender,uint256 value)",
    "safeTransferFrom(address from,address to,uint256 tokenId)",
    "setApprovalForAll(address operator,bool approved)",
    // WETH
    "deposit()",
    "withdraw(uint256 wad)",
    // Uniswap V2 / SushiSwap routers and pairs
    "swapExactETHForTokens(uint256 amountOutMin,address[] path,address to,uint256 deadline)",
    "swapExactTokensForETH(uint256 amountIn,uint256 amountOutMin,address[] path,address to,uint256 deadline)",
    "swapETHForExactTokens(uint256 amountOut,address[] path,address to,uint256 deadline)",
    "swapExactTokensForTokens(uint256 amountIn,uint256 amountOutMin,address[] path,address to,uint256 deadline)",
    "addLiquidity(address tokenA,address tokenB,uint256 amountADesired,uint256 amountBDesired,uint256 amountAMin,uint256 amountBMin,address to,uint256 deadline)",
    "addLiquidityETH(address token,uint256 amountTokenDesired,uint256 amountTokenMin,uint256 amountETHMin,address to,uint256 deadline)",
    "removeLiquidity(address tokenA,address tokenB,uint256 liquidity,uint256 amountAMin,uint256 amountBMin,address to,uint256 deadline)",
    "removeLiquidityETH(address token,uint256 liquidity,uint256 amountTokenMin,uint256 amountETHMin,address to,uint256 deadline)",
    "swap(uint256 amount0Out,uint256 amount1Out,address to,bytes data)",
    // Uniswap merkle distributor
    "claim(uint256 index,address account,uint256 amount,bytes32[] merkleProof)",
    // MasterChef
    "deposit(uint256 pid,uint256 amount)",
    "withdraw(uint256 pid,uint256 amount)",
    "emergencyWithdraw(uint256 pid)",
    // Aave
    "flashLoan(address receiverAddress,address[] assets,uint256[] amounts,uint256[] modes,address onBehalfOf,bytes params,uint16 referralCode)",
    "borrow(address asset,uint256 amount,uint256 interestRateMode,uint16 referralCode,address onBehalfOf)",
    "repay(address asset,uint256 amount,uint256 rateMode,address onBehalfOf)",
    "stake(address onBehalfOf,uint256 amount)",
    // Compound III
    "supply(address asset,uint256 amount)",
    "withdraw(address asset,uint256 amount)",
    // governance tokens
    "delegate(address delegatee)",
    "delegateBySig(address delegatee,uint256 nonce,uint256 expiry,uint8 v,bytes32 r,bytes32 s)",
    // Governor Bravo
    "castVote(uint256 proposalId,uint8 support)",
    "castVoteWithReason(uint256 proposalId,uint8 support,string reason)",
    "propose(address[] targets,uint256[] values,string[] signatures,bytes[] calldatas,string description)",
    // Curve voting escrow
    "create_lock(uint256 _value,uint256 _unlock_time)",
    // dYdX safety module
    "claimRewards(address recipient)",
    // Azuki
    "allowlistMint()",
    // Gnosis Safe
    "createProxy(address singleton,bytes data)",
    "execTransaction(address to,uint256 value,bytes data,uint8 operation,uint256 safeTxGas,uint256 baseGas,uint256 gasPrice,address gasToken,address refundReceiver,bytes signatures)",
    // Harvest / Yearn vaults
    "deposit(uint256 amount)",
    "announceStrategyUpdate(address _strategy)",
    // Lido
    "submit(address _referral)",
    // MakerDAO
    "frob(bytes32 i,address u,address v,address w,int256 dink,int256 dart)",
    "join(address usr,uint256 wad)",
    // Multicall3
    "aggregate3((address,bool,bytes)[] calls)",
    // Nexus Mutual
    "buyCover(address contractAddress,address coverAsset,uint256 sumAssured,uint16 coverPeriod,uint8 coverType,bytes data)",
];

const LOCAL_EVENTS: &[&str] = &[
    "Transfer(address indexed from,address indexed to,uint256 value)",
    "Transfer(address indexed from,address indexed to,uint256 indexed tokenId)",
    "Approval(address indexed owner,address indexed spender,uint256 value)",
    "ApprovalForAll(address indexed owner,address indexed operator,bool approved)",
    "Deposit(address indexed dst,uint256 wad)",
    "Withdrawal(address indexed src,uint256 wad)",
    "Swap(address indexed sender,uint256 amount0In,uint256 amount1In,uint256 amount0Out,uint256 amount1Out,address indexed to)",
    "Sync(uint112 reserve0,uint112 reserve1)",
    "Mint(address indexed sender,uint256 amount0,uint256 amount1)",
    "Burn(address indexed sender,uint256 amount0,uint256 amount1,address indexed to)",
    "DelegateChanged(address indexed delegator,address indexed fromDelegate,address indexed toDelegate)",
    "DelegateVotesChanged(address indexed delegate,uint256 previousBalance,uint256 newBalance)",
    "VoteCast(address indexed voter,uint256 proposalId,uint8 support,uint256 votes,string reason)",
    "Deposit(address indexed user,uint256 indexed pid,uint256 amount)",
    "Withdraw(address indexed user,uint256 indexed pid,uint256 amount)",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignatureSource {
    AbiRegistry,
    Local,
    Remote,
}

impl SignatureSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AbiRegistry => "abi-registry",
            Self::Local => "local-table",
            Self::Remote => "remote-directory",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureCandidate {
    pub signature: Signature,
    pub source: SignatureSource,
}

fn parse_table(entries: &[&str]) -> Vec<Signature> {
    entries
        .iter()
        .map(|e| Signature::parse(e).unwrap_or_else(|err| panic!("embedded signature {e:?}: {err}")))
        .collect()
}

/// Embedded function table, indexed by selector.
pub struct LocalTable {
    by_selector: HashMap<Selector, Vec<Signature>>,
}

impl LocalTable {
    pub fn builtin() -> &'static LocalTable {
        static TABLE: OnceLock<LocalTable> = OnceLock::new();
        TABLE.get_or_init(|| LocalTable::from_signatures(parse_table(LOCAL_FUNCTIONS)))
    }

    pub fn from_signatures(signatures: Vec<Signature>) -> Self {
        let mut by_selector: HashMap<Selector, Vec<Signature>> = HashMap::new();
        for sig in signatures {
            let sel = selector_of_canonical(&sig.canonical());
            let slot = by_selector.entry(sel).or_default();
            if !slot.iter().any(|s| s.canonical() == sig.canonical()) {
                slot.push(sig);
            }
        }
        Self { by_selector }
    }

    pub fn lookup(&self, selector: &Selector) -> &[Signature] {
        self.by_selector.get(selector).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_selector.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_selector.is_empty()
    }
}

/// Known events keyed by topic0. Several events can share a topic0 (ERC-20
/// and ERC-721 `Transfer`); they differ in how many parameters are indexed.
pub struct EventDb {
    by_topic: HashMap<Word, Vec<Signature>>,
}

impl EventDb {
    pub fn builtin() -> &'static EventDb {
        static DB: OnceLock<EventDb> = OnceLock::new();
        DB.get_or_init(|| EventDb::from_signatures(parse_table(LOCAL_EVENTS)))
    }

    pub fn from_signatures(signatures: Vec<Signature>) -> Self {
        let mut by_topic: HashMap<Word, Vec<Signature>> = HashMap::new();
        for sig in signatures {
            let topic = Word(keccak256(sig.canonical().as_bytes()));
            by_topic.entry(topic).or_default().push(sig);
        }
        Self { by_topic }
    }

    pub fn lookup(&self, topic0: &Word) -> &[Signature] {
        self.by_topic.get(topic0).map_or(&[], Vec::as_slice)
    }
}

/// Verified ABIs for specific contracts. Hits here decode with `exact-abi`
/// confidence.
#[derive(Debug, Default, Clone)]
pub struct AbiRegistry {
    contracts: HashMap<Address, Vec<Signature>>,
}

impl AbiRegistry {
    /// Loads `{"0xcontract": ["deposit(uint256 pid,uint256 amount)", ...]}`.
    pub fn from_json(text: &str) -> Result<Self, ChainError> {
        let raw: HashMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| ChainError::Malformed(format!("abi registry: {e}")))?;
        let mut contracts = HashMap::new();
        for (addr, sigs) in raw {
            let address: Address = addr
                .parse()
                .map_err(|e| ChainError::Malformed(format!("abi registry address {addr:?}: {e}")))?;
            let parsed = sigs
                .iter()
                .map(|s| Signature::parse(s).map_err(|e| ChainError::Malformed(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            contracts.insert(address, parsed);
        }
        Ok(Self { contracts })
    }

    pub fn insert(&mut self, contract: Address, signature: Signature) {
        self.contracts.entry(contract).or_default().push(signature);
    }

    pub fn lookup(&self, contract: &Address, selector: &Selector) -> Vec<Signature> {
        self.contracts
            .get(contract)
            .into_iter()
            .flatten()
            .filter(|s| selector_of_canonical(&s.canonical()) == *selector)
            .cloned()
            .collect()
    }
}

#[derive(Deserialize)]
struct DirectoryPage {
    results: Vec<DirectoryEntry>,
}

#[derive(Deserialize)]
struct DirectoryEntry {
    text_signature: String,
}

/// HTTP signature directory in the 4byte.directory response shape. The URL
/// template carries a `{selector}` placeholder.
pub struct RemoteDirectory {
    client: reqwest::Client,
    url_template: String,
    memo: Mutex<HashMap<Selector, Vec<Signature>>>,
}

impl RemoteDirectory {
    pub fn new(url_template: impl Into<String>, timeout: Duration) -> Result<Self, ChainError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ChainError::rpc(super::RpcErrorKind::Transport, e.to_string()))?;
        Ok(Self {
            client,
            url_template: url_template.into(),
            memo: Mutex::new(HashMap::new()),
        })
    }

    /// Candidates whose text actually hashes to `selector`; unparseable or
    /// mismatching entries are dropped.
    pub async fn lookup(&self, selector: &Selector) -> Result<Vec<Signature>, ChainError> {
        if let Some(hit) = self.memo.lock().expect("memo lock").get(selector) {
            return Ok(hit.clone());
        }
        let url = self.url_template.replace("{selector}", &selector.to_string());
        let response = self
            .client
            .get(&url)
            .send()
            .await
            .map_err(|e| ChainError::rpc(super::RpcErrorKind::Transport, e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(ChainError::rpc(super::RpcErrorKind::Http(status.as_u16()), url));
        }
        let page: DirectoryPage = response
            .json()
            .await
            .map_err(|e| ChainError::Malformed(format!("signature directory: {e}")))?;
        let mut out: Vec<Signature> = Vec::new();
        for entry in page.results {
            let Ok(sig) = Signature::parse_canonical(entry.text_signature.trim()) else {
                continue;
            };
            if selector_of_canonical(&sig.canonical()) == *selector
                && !out.iter().any(|s| s.canonical() == sig.canonical())
            {
                out.push(sig);
            }
        }
        self.memo.lock().expect("memo lock").insert(*selector, out.clone());
        Ok(out)
    }
}

pub struct SignatureResolver {
    pub registry: AbiRegistry,
    local: Option<&'static LocalTable>,
    remote: Option<RemoteDirectory>,
}

impl Default for SignatureResolver {
    fn default() -> Self {
        Self::new(AbiRegistry::default(), true, None)
    }
}

impl SignatureResolver {
    pub fn new(registry: AbiRegistry, use_local: bool, remote: Option<RemoteDirectory>) -> Self {
        Self {
            registry,
            local: use_local.then(LocalTable::builtin),
            remote,
        }
    }

    /// A resolver with no sources at all.
    pub fn empty() -> Self {
        Self::new(AbiRegistry::default(), false, None)
    }

    /// Candidates ordered registry, local, remote, without duplicates. The
    /// second value carries a remote failure message, if any.
    pub async fn resolve_selector(
        &self,
        selector: &Selector,
        contract: Option<&Address>,
    ) -> (Vec<SignatureCandidate>, Option<String>) {
        let mut out: Vec<SignatureCandidate> = Vec::new();
        let push = |sig: Signature, source: SignatureSource, out: &mut Vec<SignatureCandidate>| {
            if !out.iter().any(|c| c.signature.canonical() == sig.canonical()) {
                out.push(SignatureCandidate { signature: sig, source });
            }
        };
        if let Some(contract) = contract {
            for sig in self.registry.lookup(contract, selector) {
                push(sig, SignatureSource::AbiRegistry, &mut out);
            }
        }
        if let Some(local) = self.local {
            for sig in local.lookup(selector) {
                push(sig.clone(), SignatureSource::Local, &mut out);
            }
        }
        let mut warning = None;
        if let Some(remote) = &self.remote {
            match remote.lookup(selector).await {
                Ok(sigs) => {
                    for sig in sigs {
                        push(sig, SignatureSource::Remote, &mut out);
                    }
                }
                Err(e) => {
                    tracing::warn!(%selector, error = %e, "signature directory unavailable");
                    warning = Some(format!("signature directory unavailable: {e}"));
                }
            }
        }
        (out, warning)
    }
}
