#pragma once

#include <filesystem>
#include <optional>

#include "pricecast/lstm.hpp"

namespace pricecast {

/// Binary LSTM checkpoint, little-endian, version 1:
///
///   magic      8 bytes  "PCLSTM\0\0"
///   version    u32      1
///   scalar     u32      bytes per value (4 or 8)
///   config     u64 input_size, hidden_size, num_layers, batch_size,
///              max_epochs, patience, seed; f64 dropout_rate, learning_rate
///   count      u32      number of tensors
///   tensor     u32 name length, name bytes, u64 rows, u64 cols,
///              rows * cols values in row-major order
///   has_adam   u8
///   adam       i64 step; f64 beta1, beta2, epsilon; then the values of
///              every first-moment tensor followed by every second-moment
///              tensor, same order and layout as the parameters
template <typename Scalar>
struct Checkpoint {
    LstmNetwork<Scalar> network;
    std::optional<AdamState<Scalar>> adam;
};

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const LstmNetwork<Scalar>& network,
                     const AdamState<Scalar>* adam = nullptr);

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace pricecast
