#pragma once

// Hand-built stores, series and random instances shared by the unit tests.

#include <string>
#include <vector>

#include "xtrace/price_oracle.hpp"
#include "xtrace/simgen.hpp"
#include "xtrace/transfer_store.hpp"

namespace fixtures {

using namespace xtrace;

inline const ChainId kBtc{"btc"};
inline const ChainId kEth{"eth"};
inline const AssetId kBTC{"BTC"};
inline const AssetId kETH{"ETH"};

struct TransferArgs {
    std::string tx_id;
    ChainId chain = kEth;
    Timestamp ts = 0;
    AssetId asset = kETH;
    std::string amt = "1.00000000";
    std::vector<Address> spenders = {"s"};
    std::vector<Address> recipients = {"r"};
    std::vector<OutPoint> inputs = {};
    std::vector<TxOutput> outputs = {};
};

inline Transfer make_transfer(TransferArgs args) {
    Transfer t;
    t.tx_id = args.tx_id;
    t.chain = args.chain;
    t.ts = args.ts;
    t.asset = args.asset;
    t.amt = Amount::parse(args.amt);
    t.spenders = args.spenders;
    t.recipients = args.recipients;
    t.ord = Ord{args.ts, 0};
    t.inputs = args.inputs;
    if (args.chain == kBtc && args.outputs.empty()) {
        args.outputs = {{args.recipients.front(), t.amt}};
    }
    t.outputs = args.outputs;
    return t;
}

inline TransferStoreBuilder two_chain_builder() {
    TransferStoreBuilder b;
    b.add_chain(kBtc, ChainModel::utxo);
    b.add_chain(kEth, ChainModel::account);
    return b;
}

inline PriceSeries constant_series(const AssetId& base, const AssetId& quote, double rate,
                                   Timestamp until = 1'000'000) {
    return PriceSeries(base, quote, {{0, rate}, {until, rate}});
}

inline PriceBook constant_book(const AssetId& base, const AssetId& quote, double rate,
                               Timestamp until = 1'000'000) {
    PriceBook book;
    book.add(constant_series(base, quote, rate, until));
    book.finalize();
    return book;
}

// Random single-chain-pair instance for search/filter property tests:
// account chain "eth" and utxo chain "btc" populated with uniform noise.
inline TransferStore random_store(std::uint64_t seed, int count) {
    Rng rng(seed);
    TransferStoreBuilder b = two_chain_builder();
    std::vector<std::string> btc_txs;
    for (int i = 0; i < count; ++i) {
        bool on_btc = rng.uniform() < 0.5;
        TransferArgs args;
        args.tx_id = "r" + std::to_string(i);
        args.chain = on_btc ? kBtc : kEth;
        args.asset = on_btc ? kBTC : kETH;
        args.ts = rng.uniform_int(0, 200'000);
        args.amt = Amount::from_double(rng.log_uniform(0.01, 500.0)).str();
        args.spenders = {"a" + std::to_string(rng.uniform_int(0, 40))};
        args.recipients = {"a" + std::to_string(rng.uniform_int(0, 40))};
        if (on_btc && !btc_txs.empty() && rng.uniform() < 0.7) {
            args.inputs = {{btc_txs[rng.u64() % btc_txs.size()], 0}};
        }
        Transfer t = make_transfer(args);
        if (on_btc) btc_txs.push_back(t.tx_id);
        b.add(std::move(t));
    }
    return b.build();
}

}  // namespace fixtures
