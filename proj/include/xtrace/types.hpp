#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xtrace/amount.hpp"
#include "xtrace/errors.hpp"

namespace xtrace {

using Timestamp = std::int64_t;  // seconds since epoch
using Address = std::string;     // opaque; no per-chain format validation
using TxId = std::string;

struct ChainId {
    std::string id;
    auto operator<=>(const ChainId&) const = default;
    bool empty() const { return id.empty(); }
};

struct AssetId {
    std::string id;
    auto operator<=>(const AssetId&) const = default;
    bool empty() const { return id.empty(); }
};

struct BridgeId {
    std::string id;
    auto operator<=>(const BridgeId&) const = default;
};

enum class ChainModel { utxo, account };

inline const char* chain_model_name(ChainModel m) {
    return m == ChainModel::utxo ? "utxo" : "account";
}

inline ChainModel parse_chain_model(const std::string& name) {
    if (name == "utxo") return ChainModel::utxo;
    if (name == "account") return ChainModel::account;
    throw ConfigError("unknown chain model: " + name);
}

// Canonical total order within a chain: (block height, intra-block index).
struct Ord {
    std::int64_t block_height = 0;
    std::int32_t intra_block_index = 0;
    auto operator<=>(const Ord&) const = default;
};

// Spent-output reference on a utxo chain.
struct OutPoint {
    TxId tx_id;
    std::uint32_t vout = 0;
    auto operator<=>(const OutPoint&) const = default;
};

struct TxOutput {
    Address address;
    Amount amount;
    auto operator<=>(const TxOutput&) const = default;
};

/**
 * An atomic value-carrying on-chain event.
 *
 * Spender/recipient sets are kept sorted and unique. For utxo chains the
 * inputs reference spent outputs and outputs list the created ones; both are
 * empty on account chains.
 */
struct Transfer {
    TxId tx_id;
    ChainId chain;
    Timestamp ts = 0;
    AssetId asset;
    Amount amt;
    std::vector<Address> spenders;
    std::vector<Address> recipients;
    Ord ord;
    std::vector<OutPoint> inputs;
    std::vector<TxOutput> outputs;
};

struct TransferRef {
    ChainId chain;
    TxId tx_id;
    auto operator<=>(const TransferRef&) const = default;
    std::string str() const { return chain.id + ":" + tx_id; }
};

inline TransferRef ref_of(const Transfer& t) { return TransferRef{t.chain, t.tx_id}; }

// Association of a source transfer and a destination transfer through a
// bridge; same-chain links are permitted.
struct CrossChainLink {
    TransferRef src;
    TransferRef dst;
    BridgeId bridge;
    auto operator<=>(const CrossChainLink&) const = default;
};

/// Registry of known chains and their ledger semantics.
class ChainRegistry {
public:
    void add(const ChainId& chain, ChainModel model) {
        auto [it, inserted] = models_.emplace(chain, model);
        if (!inserted && it->second != model) {
            throw ConfigError("conflicting model for chain " + chain.id);
        }
    }

    bool contains(const ChainId& chain) const { return models_.count(chain) > 0; }

    ChainModel model(const ChainId& chain) const {
        auto it = models_.find(chain);
        if (it == models_.end()) {
            throw InvalidChainError("chain not registered: " + chain.id);
        }
        return it->second;
    }

    const std::map<ChainId, ChainModel>& all() const { return models_; }

private:
    std::map<ChainId, ChainModel> models_;
};

}  // namespace xtrace
