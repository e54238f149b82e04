#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xtrace/format.hpp"
#include "xtrace/price_oracle.hpp"
#include "xtrace/simgen.hpp"
#include "xtrace/transfer_store.hpp"

namespace xtrace {

using ordered_json = nlohmann::ordered_json;

enum class Tier { raw, hf, hf_mini };

inline const char* tier_name(Tier t) {
    switch (t) {
        case Tier::raw: return "raw";
        case Tier::hf: return "hf";
        case Tier::hf_mini: return "hfMini";
    }
    return "unknown";
}

inline Tier parse_tier(const std::string& name) {
    if (name == "raw") return Tier::raw;
    if (name == "hf") return Tier::hf;
    if (name == "hfMini" || name == "hf-mini") return Tier::hf_mini;
    throw ConfigError("unknown tier: " + name);
}

/**
 * One complete swap workflow: the inbound transaction on the source chain
 * and the outbound transaction on the destination chain. Unknown fields from
 * external files are preserved opaquely and re-emitted on write.
 */
struct SwapRecord {
    TxId inbound_tx_id;
    ChainId inbound_chain;
    AssetId inbound_asset;
    Amount inbound_amt;
    Timestamp inbound_ts = 0;
    TxId outbound_tx_id;
    ChainId outbound_chain;
    AssetId outbound_asset;
    Amount outbound_amt;
    Timestamp outbound_ts = 0;
    BridgeId bridge;
    std::optional<Address> inbound_from;
    std::optional<Address> inbound_to;
    std::optional<Address> outbound_from;
    std::optional<Address> outbound_to;
    ordered_json extras = ordered_json::object();

    Timestamp delay() const { return outbound_ts - inbound_ts; }

    PairSpec pair() const {
        return PairSpec{inbound_chain, inbound_asset, outbound_chain, outbound_asset};
    }
};

struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

struct DatasetManifest {
    std::string tier;
    std::size_t record_count = 0;
    std::vector<PairSpec> pairs;
    std::string provenance_kind;  // "synthetic" or "external"
    std::uint64_t seed = 0;       // synthetic provenance
    std::string source_path;      // external provenance
};

// Tier selection parameters: per-asset inbound minimums, the inclusive delay
// cap, and the per-pair sample size of the mini tier.
struct TierPolicy {
    std::map<AssetId, Amount> min_inbound;
    Timestamp max_delay = 1800;
    int per_pair_sample = 100;
};

inline TierPolicy tier_policy_from_spec(const WorldSpec& spec) {
    TierPolicy policy;
    for (const auto& [asset, traits] : spec.asset_traits) {
        policy.min_inbound[asset] = traits.hf_threshold;
    }
    return policy;
}

// ---------------------------------------------------------------------------
// Tier filtering

inline std::vector<SwapRecord> apply_tier_filter(const std::vector<SwapRecord>& records,
                                                 Tier tier, const TierPolicy& policy,
                                                 std::uint64_t seed) {
    if (tier == Tier::raw) return records;

    std::vector<SwapRecord> kept;
    for (const SwapRecord& r : records) {
        auto it = policy.min_inbound.find(r.inbound_asset);
        if (it == policy.min_inbound.end()) {
            throw ConfigError("no tier threshold for asset " + r.inbound_asset.id);
        }
        if (r.inbound_amt >= it->second && r.delay() <= policy.max_delay) kept.push_back(r);
    }
    if (tier == Tier::hf) return kept;

    // Mini tier: uniform per-pair sample of the hf records; selected records
    // keep their original relative order.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const SwapRecord& r = kept[i];
        groups[r.inbound_chain.id + "/" + r.inbound_asset.id + ">" + r.outbound_chain.id + "/" +
               r.outbound_asset.id]
            .push_back(i);
    }
    std::set<std::size_t> selected;
    for (const auto& [key, indices] : groups) {
        std::size_t want = static_cast<std::size_t>(policy.per_pair_sample);
        if (indices.size() <= want) {
            selected.insert(indices.begin(), indices.end());
            continue;
        }
        std::vector<std::size_t> shuffled = indices;
        Rng rng(seed ^ fnv1a(key));
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            std::size_t j = rng.u64() % (i + 1);
            std::swap(shuffled[i], shuffled[j]);
        }
        selected.insert(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(want));
    }
    std::vector<SwapRecord> out;
    out.reserve(selected.size());
    for (std::size_t i : selected) out.push_back(kept[i]);
    return out;
}

// ---------------------------------------------------------------------------
// JSONL helpers

namespace detail {

inline void each_data_line(std::istream& in, const std::function<void(std::size_t,
                                                                      const std::string&)>& fn) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        fn(number, line);
    }
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open " + path.string());
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

inline std::string json_string(const ordered_json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw ParseError(line, std::string("missing or non-string field: ") + key);
    }
    return j[key].get<std::string>();
}

inline std::int64_t json_int(const ordered_json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw ParseError(line, std::string("missing or non-integer field: ") + key);
    }
    return j[key].get<std::int64_t>();
}

inline Amount json_amount(const ordered_json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw ParseError(line, std::string("missing or non-string amount field: ") + key);
    }
    try {
        return Amount::parse(j[key].get<std::string>());
    } catch (const ParseError& e) {
        throw ParseError(line, std::string(key) + ": " + e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Transfer records (one JSON object per line)

inline ordered_json transfer_to_json(const Transfer& t) {
    ordered_json j;
    j["txId"] = t.tx_id;
    j["chain"] = t.chain.id;
    j["ts"] = t.ts;
    j["asset"] = t.asset.id;
    j["amt"] = t.amt.str();
    j["spenders"] = t.spenders;
    j["recipients"] = t.recipients;
    j["blockHeight"] = t.ord.block_height;
    j["intraBlockIndex"] = t.ord.intra_block_index;
    ordered_json inputs = ordered_json::array();
    for (const OutPoint& in : t.inputs) inputs.push_back({{"txId", in.tx_id}, {"vout", in.vout}});
    j["inputs"] = std::move(inputs);
    ordered_json outputs = ordered_json::array();
    for (const TxOutput& out : t.outputs) {
        outputs.push_back({{"address", out.address}, {"amount", out.amount.str()}});
    }
    j["outputs"] = std::move(outputs);
    return j;
}

inline Transfer transfer_from_json(const ordered_json& j, std::size_t line) {
    Transfer t;
    t.tx_id = detail::json_string(j, "txId", line);
    t.chain = ChainId{detail::json_string(j, "chain", line)};
    t.ts = detail::json_int(j, "ts", line);
    t.asset = AssetId{detail::json_string(j, "asset", line)};
    t.amt = detail::json_amount(j, "amt", line);
    if (!j.contains("spenders") || !j["spenders"].is_array() || !j.contains("recipients") ||
        !j["recipients"].is_array()) {
        throw ParseError(line, "spenders/recipients must be arrays");
    }
    for (const auto& s : j["spenders"]) t.spenders.push_back(s.get<std::string>());
    for (const auto& r : j["recipients"]) t.recipients.push_back(r.get<std::string>());
    // Optional ordinal: missing height falls back to a timestamp-derived
    // pseudo-height, missing intra-block index to zero.
    t.ord.block_height = j.contains("blockHeight") ? j["blockHeight"].get<std::int64_t>() : t.ts;
    t.ord.intra_block_index =
        j.contains("intraBlockIndex") ? j["intraBlockIndex"].get<std::int32_t>() : 0;
    if (j.contains("inputs")) {
        for (const auto& in : j["inputs"]) {
            t.inputs.push_back(
                {in.at("txId").get<std::string>(), in.at("vout").get<std::uint32_t>()});
        }
    }
    if (j.contains("outputs")) {
        for (const auto& out : j["outputs"]) {
            t.outputs.push_back({out.at("address").get<std::string>(),
                                 Amount::parse(out.at("amount").get<std::string>())});
        }
    }
    return t;
}

inline void write_transfers(const std::filesystem::path& path,
                            const std::vector<Transfer>& transfers) {
    std::ofstream out = detail::open_out(path);
    for (const Transfer& t : transfers) out << transfer_to_json(t).dump() << "\n";
}

inline std::vector<Transfer> read_transfers(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    std::vector<Transfer> out;
    detail::each_data_line(in, [&](std::size_t line, const std::string& text) {
        ordered_json j = ordered_json::parse(text, nullptr, false);
        if (j.is_discarded()) throw ParseError(line, "invalid JSON");
        out.push_back(transfer_from_json(j, line));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Price series files: a header identifying the pair, then "ts,rate" lines.

inline void write_price_series(const std::filesystem::path& path, const PriceSeries& series) {
    std::ofstream out = detail::open_out(path);
    out << "# price-series base=" << series.base().id << " quote=" << series.quote().id << "\n";
    for (const PriceSample& s : series.samples()) {
        out << s.ts << "," << format_shortest(s.rate) << "\n";
    }
}

inline PriceSeries read_price_series(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    std::string header;
    std::size_t line_no = 0;
    AssetId base, quote;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# price-series", 0) != 0) {
            throw ParseError(line_no, "price file must start with a '# price-series' header");
        }
        std::istringstream hdr(line.substr(14));
        std::string token;
        while (hdr >> token) {
            if (token.rfind("base=", 0) == 0) base = AssetId{token.substr(5)};
            if (token.rfind("quote=", 0) == 0) quote = AssetId{token.substr(6)};
        }
        break;
    }
    if (base.empty() || quote.empty()) {
        throw ParseError(line_no, "price header must name base and quote assets");
    }
    std::vector<PriceSample> samples;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(line_no, "expected 'ts,rate'");
        Timestamp ts = parse_int(std::string_view(line).substr(0, comma), line_no);
        double rate = parse_double(std::string_view(line).substr(comma + 1), line_no);
        if (!samples.empty() && ts <= samples.back().ts) {
            throw ParseError(line_no, "timestamps must be strictly increasing");
        }
        if (rate <= 0.0) throw ParseError(line_no, "rates must be positive");
        samples.push_back({ts, rate});
    }
    if (samples.empty()) throw ParseError(line_no, "price series has no samples");
    return PriceSeries(base, quote, std::move(samples));
}

// ---------------------------------------------------------------------------
// Ground-truth link file (CSV)

namespace detail {

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += "\"\"";
        else quoted.push_back(c);
    }
    quoted.push_back('"');
    return quoted;
}

inline std::vector<std::string> csv_split(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (quoted) throw ParseError(line_no, "unterminated quoted field");
    fields.push_back(std::move(current));
    return fields;
}

}  // namespace detail

inline void write_links(const std::filesystem::path& path,
                        const std::vector<GroundTruthLink>& links) {
    std::ofstream out = detail::open_out(path);
    out << "srcTxId,srcChain,dstTxId,dstChain,bridge,fee,delay\n";
    for (const GroundTruthLink& l : links) {
        out << detail::csv_quote(l.link.src.tx_id) << "," << detail::csv_quote(l.link.src.chain.id)
            << "," << detail::csv_quote(l.link.dst.tx_id) << ","
            << detail::csv_quote(l.link.dst.chain.id) << "," << detail::csv_quote(l.link.bridge.id)
            << "," << format_shortest(l.fee) << "," << l.delay << "\n";
    }
}

inline std::vector<GroundTruthLink> read_links(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    std::vector<GroundTruthLink> out;
    bool header_seen = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column names are fixed
            continue;
        }
        std::vector<std::string> f = detail::csv_split(line, line_no);
        if (f.size() != 7) throw ParseError(line_no, "expected 7 fields");
        GroundTruthLink l;
        l.link.src = TransferRef{ChainId{f[1]}, f[0]};
        l.link.dst = TransferRef{ChainId{f[3]}, f[2]};
        l.link.bridge = BridgeId{f[4]};
        l.fee = parse_double(f[5], line_no);
        l.delay = parse_int(f[6], line_no);
        out.push_back(std::move(l));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Swap records (one JSON object per line)

inline ordered_json swap_to_json(const SwapRecord& r) {
    ordered_json j;
    j["inboundTxId"] = r.inbound_tx_id;
    j["inboundChain"] = r.inbound_chain.id;
    j["inboundAsset"] = r.inbound_asset.id;
    j["inboundAmt"] = r.inbound_amt.str();
    j["inboundTs"] = r.inbound_ts;
    if (r.inbound_from) j["inboundFrom"] = *r.inbound_from;
    if (r.inbound_to) j["inboundTo"] = *r.inbound_to;
    j["outboundTxId"] = r.outbound_tx_id;
    j["outboundChain"] = r.outbound_chain.id;
    j["outboundAsset"] = r.outbound_asset.id;
    j["outboundAmt"] = r.outbound_amt.str();
    j["outboundTs"] = r.outbound_ts;
    if (r.outbound_from) j["outboundFrom"] = *r.outbound_from;
    if (r.outbound_to) j["outboundTo"] = *r.outbound_to;
    j["bridge"] = r.bridge.id;
    for (const auto& [key, value] : r.extras.items()) j[key] = value;
    return j;
}

inline SwapRecord swap_from_json(const ordered_json& j, std::size_t line) {
    static const std::set<std::string> known = {
        "inboundTxId",  "inboundChain",  "inboundAsset",  "inboundAmt",  "inboundTs",
        "inboundFrom",  "inboundTo",     "outboundTxId",  "outboundChain",
        "outboundAsset", "outboundAmt",  "outboundTs",    "outboundFrom", "outboundTo",
        "bridge"};
    SwapRecord r;
    r.inbound_tx_id = detail::json_string(j, "inboundTxId", line);
    r.inbound_chain = ChainId{detail::json_string(j, "inboundChain", line)};
    r.inbound_asset = AssetId{detail::json_string(j, "inboundAsset", line)};
    r.inbound_amt = detail::json_amount(j, "inboundAmt", line);
    r.inbound_ts = detail::json_int(j, "inboundTs", line);
    r.outbound_tx_id = detail::json_string(j, "outboundTxId", line);
    r.outbound_chain = ChainId{detail::json_string(j, "outboundChain", line)};
    r.outbound_asset = AssetId{detail::json_string(j, "outboundAsset", line)};
    r.outbound_amt = detail::json_amount(j, "outboundAmt", line);
    r.outbound_ts = detail::json_int(j, "outboundTs", line);
    r.bridge = BridgeId{detail::json_string(j, "bridge", line)};
    if (j.contains("inboundFrom")) r.inbound_from = j["inboundFrom"].get<std::string>();
    if (j.contains("inboundTo")) r.inbound_to = j["inboundTo"].get<std::string>();
    if (j.contains("outboundFrom")) r.outbound_from = j["outboundFrom"].get<std::string>();
    if (j.contains("outboundTo")) r.outbound_to = j["outboundTo"].get<std::string>();
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) r.extras[key] = value;
    }
    if (r.outbound_ts < r.inbound_ts) {
        throw ParseError(line, "outbound timestamp precedes inbound timestamp");
    }
    if (r.inbound_amt <= Amount{} || r.outbound_amt <= Amount{}) {
        throw ParseError(line, "swap amounts must be positive");
    }
    return r;
}

inline void write_swaps(const std::filesystem::path& path, const std::vector<SwapRecord>& records) {
    std::ofstream out = detail::open_out(path);
    for (const SwapRecord& r : records) out << swap_to_json(r).dump() << "\n";
}

struct LoadedSwaps {
    std::vector<SwapRecord> records;
    std::vector<Transfer> transfers;  // derived inbound/outbound pairs
    std::vector<GroundTruthLink> links;
    std::vector<ParseIssue> issues;  // populated in lenient mode
};

/**
 * Reads a swap-record file; each well-formed record yields two transfers and
 * one ground-truth link. In strict mode (the default) the first malformed
 * line aborts with its line number; in lenient mode malformed lines are
 * reported and skipped.
 */
inline LoadedSwaps load_swap_records(const std::filesystem::path& path, bool strict = true) {
    std::ifstream in = detail::open_in(path);
    LoadedSwaps loaded;
    detail::each_data_line(in, [&](std::size_t line, const std::string& text) {
        try {
            ordered_json j = ordered_json::parse(text, nullptr, false);
            if (j.is_discarded()) throw ParseError(line, "invalid JSON");
            loaded.records.push_back(swap_from_json(j, line));
        } catch (const ParseError& e) {
            if (strict) throw;
            loaded.issues.push_back({e.line(), e.what()});
        }
    });
    for (const SwapRecord& r : loaded.records) {
        Transfer inbound;
        inbound.tx_id = r.inbound_tx_id;
        inbound.chain = r.inbound_chain;
        inbound.ts = r.inbound_ts;
        inbound.asset = r.inbound_asset;
        inbound.amt = r.inbound_amt;
        inbound.spenders = {r.inbound_from.value_or("unknown-sender:" + r.inbound_tx_id)};
        inbound.recipients = {r.inbound_to.value_or("bridge:" + r.bridge.id)};
        inbound.ord = Ord{r.inbound_ts, 0};
        loaded.transfers.push_back(std::move(inbound));

        Transfer outbound;
        outbound.tx_id = r.outbound_tx_id;
        outbound.chain = r.outbound_chain;
        outbound.ts = r.outbound_ts;
        outbound.asset = r.outbound_asset;
        outbound.amt = r.outbound_amt;
        outbound.spenders = {r.outbound_from.value_or("bridge:" + r.bridge.id)};
        outbound.recipients = {r.outbound_to.value_or("unknown-recipient:" + r.outbound_tx_id)};
        outbound.ord = Ord{r.outbound_ts, 0};
        loaded.transfers.push_back(std::move(outbound));

        loaded.links.push_back(GroundTruthLink{
            CrossChainLink{TransferRef{r.inbound_chain, r.inbound_tx_id},
                           TransferRef{r.outbound_chain, r.outbound_tx_id}, r.bridge},
            0.0, r.delay()});
    }
    return loaded;
}

// ---------------------------------------------------------------------------
// Manifest and dataset directory

inline ordered_json pair_to_json(const PairSpec& p) {
    ordered_json j;
    j["srcChain"] = p.src_chain.id;
    j["srcAsset"] = p.src_asset.id;
    j["dstChain"] = p.dst_chain.id;
    j["dstAsset"] = p.dst_asset.id;
    return j;
}

inline PairSpec pair_from_json(const ordered_json& j) {
    return PairSpec{ChainId{j.at("srcChain").get<std::string>()},
                    AssetId{j.at("srcAsset").get<std::string>()},
                    ChainId{j.at("dstChain").get<std::string>()},
                    AssetId{j.at("dstAsset").get<std::string>()}};
}

inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<DatasetManifest>& manifests) {
    ordered_json arr = ordered_json::array();
    for (const DatasetManifest& m : manifests) {
        ordered_json j;
        j["tier"] = m.tier;
        j["recordCount"] = m.record_count;
        ordered_json pairs = ordered_json::array();
        for (const PairSpec& p : m.pairs) pairs.push_back(pair_to_json(p));
        j["pairs"] = std::move(pairs);
        ordered_json prov;
        prov["kind"] = m.provenance_kind;
        if (m.provenance_kind == "synthetic") prov["seed"] = m.seed;
        else prov["path"] = m.source_path;
        j["provenance"] = std::move(prov);
        arr.push_back(std::move(j));
    }
    std::ofstream out = detail::open_out(path);
    out << arr.dump(2) << "\n";
}

inline std::vector<DatasetManifest> read_manifest(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    ordered_json arr = ordered_json::parse(in, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) throw ParseError(1, "manifest must be a JSON array");
    std::vector<DatasetManifest> out;
    for (const auto& j : arr) {
        DatasetManifest m;
        m.tier = j.at("tier").get<std::string>();
        m.record_count = j.at("recordCount").get<std::size_t>();
        for (const auto& p : j.at("pairs")) m.pairs.push_back(pair_from_json(p));
        const auto& prov = j.at("provenance");
        m.provenance_kind = prov.at("kind").get<std::string>();
        if (prov.contains("seed")) m.seed = prov.at("seed").get<std::uint64_t>();
        if (prov.contains("path")) m.source_path = prov.at("path").get<std::string>();
        out.push_back(std::move(m));
    }
    return out;
}

inline void write_chains(const std::filesystem::path& path,
                         const std::map<ChainId, ChainModel>& chains) {
    ordered_json j;
    for (const auto& [chain, model] : chains) j[chain.id] = chain_model_name(model);
    std::ofstream out = detail::open_out(path);
    out << j.dump(2) << "\n";
}

inline std::map<ChainId, ChainModel> read_chains(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    ordered_json j = ordered_json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(1, "chains file must be an object");
    std::map<ChainId, ChainModel> out;
    for (const auto& [chain, model] : j.items()) {
        out[ChainId{chain}] = parse_chain_model(model.get<std::string>());
    }
    return out;
}

inline void write_sybil(const std::filesystem::path& path,
                        const std::map<std::string, SybilScenario>& scenarios) {
    ordered_json arr = ordered_json::array();
    for (const auto& [id, s] : scenarios) {
        ordered_json j;
        j["id"] = s.id;
        j["rootAddress"] = s.root;
        j["depth"] = s.depth;
        ordered_json leaves = ordered_json::array();
        for (const TransferRef& leaf : s.leaves) {
            leaves.push_back({{"chain", leaf.chain.id}, {"txId", leaf.tx_id}});
        }
        j["leaves"] = std::move(leaves);
        arr.push_back(std::move(j));
    }
    ordered_json root;
    root["scenarios"] = std::move(arr);
    std::ofstream out = detail::open_out(path);
    out << root.dump(2) << "\n";
}

inline std::map<std::string, SybilScenario> read_sybil(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    ordered_json j = ordered_json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError(1, "invalid sybil manifest");
    std::map<std::string, SybilScenario> out;
    for (const auto& s : j.at("scenarios")) {
        SybilScenario scenario;
        scenario.id = s.at("id").get<std::string>();
        scenario.root = s.at("rootAddress").get<std::string>();
        scenario.depth = s.at("depth").get<int>();
        for (const auto& leaf : s.at("leaves")) {
            scenario.leaves.push_back(
                TransferRef{ChainId{leaf.at("chain").get<std::string>()},
                            leaf.at("txId").get<std::string>()});
        }
        out.emplace(scenario.id, scenario);
    }
    return out;
}

struct Dataset {
    TransferStore store;
    PriceBook prices;
    GroundTruth truth;
    std::vector<DatasetManifest> manifests;
    std::map<ChainId, ChainModel> chain_models;

    // Source pairs whose destination side matches the given transfer.
    std::vector<SourcePair> source_pairs_for(const ChainId& dst_chain,
                                             const AssetId& dst_asset) const {
        std::set<SourcePair> uniq;
        for (const DatasetManifest& m : manifests) {
            for (const PairSpec& p : m.pairs) {
                if (p.dst_chain == dst_chain && p.dst_asset == dst_asset) {
                    uniq.insert(SourcePair{p.src_chain, p.src_asset});
                }
            }
        }
        return std::vector<SourcePair>(uniq.begin(), uniq.end());
    }
};

inline std::vector<PairSpec> pairs_of_links(const std::vector<GroundTruthLink>& links,
                                            const std::vector<SwapRecord>& records) {
    std::set<PairSpec> uniq;
    for (const SwapRecord& r : records) uniq.insert(r.pair());
    (void)links;
    return std::vector<PairSpec>(uniq.begin(), uniq.end());
}

// Builds the swap records of a generated world, ordered by (inbound ts, id).
inline std::vector<SwapRecord> world_swap_records(const World& world) {
    std::vector<SwapRecord> records;
    for (const GroundTruthLink& l : world.truth.links) {
        const Transfer& inbound = world.store.resolve(l.link.src);
        const Transfer& outbound = world.store.resolve(l.link.dst);
        SwapRecord r;
        r.inbound_tx_id = inbound.tx_id;
        r.inbound_chain = inbound.chain;
        r.inbound_asset = inbound.asset;
        r.inbound_amt = inbound.amt;
        r.inbound_ts = inbound.ts;
        r.inbound_from = inbound.spenders.front();
        r.inbound_to = inbound.recipients.front();
        r.outbound_tx_id = outbound.tx_id;
        r.outbound_chain = outbound.chain;
        r.outbound_asset = outbound.asset;
        r.outbound_amt = outbound.amt;
        r.outbound_ts = outbound.ts;
        r.outbound_from = outbound.spenders.front();
        r.outbound_to = outbound.recipients.front();
        r.bridge = l.link.bridge;
        records.push_back(std::move(r));
    }
    std::sort(records.begin(), records.end(), [](const SwapRecord& a, const SwapRecord& b) {
        return std::tie(a.inbound_ts, a.inbound_tx_id) < std::tie(b.inbound_ts, b.inbound_tx_id);
    });
    return records;
}

/**
 * Writes a full dataset directory: chain registry, transfer records, price
 * series, ground-truth links, the three swap tiers and the manifest (plus
 * the sybil manifest when scenarios were planted).
 */
inline void write_dataset(const World& world, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::map<ChainId, ChainModel> chains;
    for (const ChainSpec& c : world.spec.chains) chains[c.id] = c.model;
    write_chains(dir / "chains.json", chains);

    std::vector<Transfer> transfers = world.store.transfers();
    std::sort(transfers.begin(), transfers.end(), [](const Transfer& a, const Transfer& b) {
        return std::tie(a.chain, a.ord, a.tx_id) < std::tie(b.chain, b.ord, b.tx_id);
    });
    write_transfers(dir / "transfers.jsonl", transfers);

    for (const PriceSeries* series : world.prices.primary_series()) {
        write_price_series(dir / "prices" / (series->base().id + "_" + series->quote().id + ".csv"),
                           *series);
    }

    write_links(dir / "links.csv", world.truth.links);

    std::vector<SwapRecord> raw = world_swap_records(world);
    TierPolicy policy = tier_policy_from_spec(world.spec);
    std::vector<SwapRecord> hf = apply_tier_filter(raw, Tier::hf, policy, world.spec.seed);
    std::vector<SwapRecord> mini = apply_tier_filter(raw, Tier::hf_mini, policy, world.spec.seed);
    write_swaps(dir / "swaps_raw.jsonl", raw);
    write_swaps(dir / "swaps_hf.jsonl", hf);
    write_swaps(dir / "swaps_hfmini.jsonl", mini);

    std::vector<PairSpec> pairs(world.spec.pairs.begin(), world.spec.pairs.end());
    std::vector<DatasetManifest> manifests;
    for (auto [tier, count] : {std::pair<Tier, std::size_t>{Tier::raw, raw.size()},
                               {Tier::hf, hf.size()},
                               {Tier::hf_mini, mini.size()}}) {
        DatasetManifest m;
        m.tier = tier_name(tier);
        m.record_count = count;
        m.pairs = pairs;
        m.provenance_kind = "synthetic";
        m.seed = world.spec.seed;
        manifests.push_back(std::move(m));
    }
    write_manifest(dir / "manifest.json", manifests);

    if (!world.truth.sybil.empty()) write_sybil(dir / "sybil.json", world.truth.sybil);
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset dataset;
    dataset.chain_models = read_chains(dir / "chains.json");
    TransferStoreBuilder builder;
    for (const auto& [chain, model] : dataset.chain_models) builder.add_chain(chain, model);
    for (Transfer& t : read_transfers(dir / "transfers.jsonl")) builder.add(std::move(t));
    dataset.store = builder.build();

    if (std::filesystem::exists(dir / "prices")) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir / "prices")) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) dataset.prices.add(read_price_series(file));
    }
    dataset.prices.finalize();

    if (std::filesystem::exists(dir / "links.csv")) {
        dataset.truth.links = read_links(dir / "links.csv");
    }
    if (std::filesystem::exists(dir / "sybil.json")) {
        dataset.truth.sybil = read_sybil(dir / "sybil.json");
    }
    dataset.manifests = read_manifest(dir / "manifest.json");
    return dataset;
}

/**
 * Converts an external swap-record file into a dataset directory. Only the
 * raw tier is materialized unless per-asset thresholds are supplied; chains
 * referenced by the records are registered with account semantics.
 */
inline LoadedSwaps ingest_swaps(const std::filesystem::path& input,
                                const std::filesystem::path& out_dir, bool strict = true,
                                const std::optional<TierPolicy>& policy = std::nullopt,
                                std::uint64_t seed = 0) {
    LoadedSwaps loaded = load_swap_records(input, strict);
    std::filesystem::create_directories(out_dir);

    std::map<ChainId, ChainModel> chains;
    for (const Transfer& t : loaded.transfers) chains.emplace(t.chain, ChainModel::account);
    write_chains(out_dir / "chains.json", chains);

    std::vector<Transfer> transfers = loaded.transfers;
    std::sort(transfers.begin(), transfers.end(), [](const Transfer& a, const Transfer& b) {
        return std::tie(a.chain, a.ord, a.tx_id) < std::tie(b.chain, b.ord, b.tx_id);
    });
    write_transfers(out_dir / "transfers.jsonl", transfers);
    write_links(out_dir / "links.csv", loaded.links);
    write_swaps(out_dir / "swaps_raw.jsonl", loaded.records);

    std::vector<PairSpec> pairs = pairs_of_links(loaded.links, loaded.records);
    std::vector<DatasetManifest> manifests;
    DatasetManifest raw;
    raw.tier = tier_name(Tier::raw);
    raw.record_count = loaded.records.size();
    raw.pairs = pairs;
    raw.provenance_kind = "external";
    raw.source_path = input.string();
    manifests.push_back(raw);
    if (policy) {
        std::vector<SwapRecord> hf = apply_tier_filter(loaded.records, Tier::hf, *policy, seed);
        std::vector<SwapRecord> mini =
            apply_tier_filter(loaded.records, Tier::hf_mini, *policy, seed);
        write_swaps(out_dir / "swaps_hf.jsonl", hf);
        write_swaps(out_dir / "swaps_hfmini.jsonl", mini);
        for (auto [tier, count] : {std::pair<Tier, std::size_t>{Tier::hf, hf.size()},
                                   {Tier::hf_mini, mini.size()}}) {
            DatasetManifest m = raw;
            m.tier = tier_name(tier);
            m.record_count = count;
            manifests.push_back(std::move(m));
        }
    }
    write_manifest(out_dir / "manifest.json", manifests);
    return loaded;
}

}  // namespace xtrace
