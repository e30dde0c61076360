#include <cstring>

#include <gtest/gtest.h>

#include "lstm_fixtures.hpp"
#include "pricecast/checkpoint.hpp"
#include "test_util.hpp"

using namespace pricecast;
using testutil::TempDir;

namespace {

template <typename S>
void expect_bit_equal(const LstmParams<S>& a, const LstmParams<S>& b) {
    const auto ta = tensors(a), tb = tensors(b);
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t k = 0; k < ta.size(); ++k) {
        EXPECT_EQ(ta[k].name, tb[k].name);
        ASSERT_EQ(ta[k].rows, tb[k].rows);
        ASSERT_EQ(ta[k].cols, tb[k].cols);
        EXPECT_EQ(std::memcmp(ta[k].data, tb[k].data, sizeof(S) * static_cast<std::size_t>(ta[k].size())), 0) << ta[k].name;
    }
}

template <typename S>
TrainResult<S> trained() {
    LstmConfig c;
    c.input_size = 1;
    c.hidden_size = 5;
    c.patience = 0;
    c.max_epochs = 3;
    c.batch_size = 4;
    c.seed = 3;
    return train(init_network<S>(c), fixtures::sine_windows(12, 6), WindowedDataset{});
}

}  // namespace

TEST(Checkpoint, DoubleRoundTripIsBitExact) {
    TempDir dir;
    const auto r = trained<double>();
    save_checkpoint(dir / "m.ckpt", r.network, &r.adam);
    const auto back = load_checkpoint<double>(dir / "m.ckpt");
    EXPECT_EQ(back.network.config, r.network.config);
    expect_bit_equal(back.network.params, r.network.params);
    ASSERT_TRUE(back.adam.has_value());
    EXPECT_EQ(back.adam->step, r.adam.step);
    expect_bit_equal(back.adam->m, r.adam.m);
    expect_bit_equal(back.adam->v, r.adam.v);
    EXPECT_FALSE(std::filesystem::exists(dir / "m.ckpt.tmp"));
}

TEST(Checkpoint, FloatRoundTripWithoutOptimizer) {
    TempDir dir;
    const auto r = trained<float>();
    save_checkpoint<float>(dir / "f.ckpt", r.network);
    const auto back = load_checkpoint<float>(dir / "f.ckpt");
    expect_bit_equal(back.network.params, r.network.params);
    EXPECT_FALSE(back.adam.has_value());
    EXPECT_THROW(load_checkpoint<double>(dir / "f.ckpt"), DataError);
}

TEST(Checkpoint, RowMajorLayoutOnDisk) {
    TempDir dir;
    LstmConfig c;
    c.input_size = 2;
    c.hidden_size = 1;
    c.num_layers = 1;
    auto net = init_network<double>(c);
    net.params.layers[0].W << 1, 2, 3, 4, 5, 6, 7, 8;  // 4 x 2
    save_checkpoint<double>(dir / "l.ckpt", net);
    const std::string bytes = testutil::read(dir / "l.ckpt");
    const std::string name = "layer0.W";
    const auto pos = bytes.find(name);
    ASSERT_NE(pos, std::string::npos);
    const char* p = bytes.data() + pos + name.size() + 16;  // skip rows, cols
    double first[3];
    std::memcpy(first, p, sizeof first);
    EXPECT_EQ(first[0], 1);
    EXPECT_EQ(first[1], 2);
    EXPECT_EQ(first[2], 3);
    EXPECT_EQ(bytes.substr(0, 6), "PCLSTM");
}

TEST(Checkpoint, RejectsCorruptFiles) {
    TempDir dir;
    const auto r = trained<double>();
    save_checkpoint(dir / "m.ckpt", r.network, &r.adam);
    const std::string bytes = testutil::read(dir / "m.ckpt");
    dir.write("truncated.ckpt", bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(load_checkpoint<double>(dir / "truncated.ckpt"), DataError);
    std::string bad = bytes;
    bad[0] = 'X';
    dir.write("magic.ckpt", bad);
    EXPECT_THROW(load_checkpoint<double>(dir / "magic.ckpt"), DataError);
    dir.write("trailing.ckpt", bytes + "junk");
    EXPECT_THROW(load_checkpoint<double>(dir / "trailing.ckpt"), DataError);
    EXPECT_THROW(load_checkpoint<double>(dir / "absent.ckpt"), DataError);
}
