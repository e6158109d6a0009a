#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "resunet/augment.hpp"
#include "resunet/fixture.hpp"
#include "resunet/loss.hpp"
#include "resunet/network.hpp"
#include "resunet/optimizer.hpp"
#include "resunet/preprocess.hpp"

namespace resunet {

struct TrainConfig {
  NetworkConfig net;
  int epochs = 300;
  int batch_size = 8;
  double learning_rate = 1e-4;
  double l2 = 1e-5;
  bool augment = true;
  std::uint64_t seed = 1234;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double seconds = 0.0;  // wall time of the epoch, validation included
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

/// In-memory training set: patches with their manifest split applied.
struct TrainData {
  int patch_size = 0;
  int channels = 0;
  std::vector<Tensor<float>> images;
  std::vector<Tensor<std::uint8_t>> masks;
  std::vector<std::size_t> train_idx, val_idx;
};

inline void append_store(TrainData& data, PatchStore& store) {
  if (data.patch_size == 0) {
    data.patch_size = store.patch_size();
    data.channels = store.channels();
  } else {
    require(data.patch_size == store.patch_size() && data.channels == store.channels(),
            ErrorKind::ShapeMismatch, "patch stores disagree on patch geometry");
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    Tensor<float> image;
    Tensor<std::uint8_t> mask;
    store.read(i, image, mask);
    const std::size_t at = data.images.size();
    data.images.push_back(std::move(image));
    data.masks.push_back(std::move(mask));
    if (store.meta(i).split == "val")
      data.val_idx.push_back(at);
    else
      data.train_idx.push_back(at);
  }
}

inline TrainData load_train_data(PatchStore& store) {
  TrainData data;
  append_store(data, store);
  return data;
}

namespace detail {

template <class T>
double run_batches(ResUNet<T>& net, const TrainData& data,
                   const std::vector<std::size_t>& order, const TrainConfig& cfg,
                   Adam<T>* opt, int epoch) {
  const int P = data.patch_size;
  double loss_sum = 0.0;
  std::size_t seen = 0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t nb = std::min<std::size_t>(cfg.batch_size, order.size() - start);
    Tensor<T> batch({static_cast<int>(nb), data.channels, P, P});
    Tensor<std::uint8_t> labels({static_cast<int>(nb), P, P});
    for (std::size_t j = 0; j < nb; ++j) {
      const std::size_t idx = order[start + j];
      Tensor<float> image = data.images[idx];
      Tensor<std::uint8_t> mask = data.masks[idx];
      if (opt && cfg.augment) {
        Rng aug = Rng::derive(cfg.seed, {streams::kAugment, static_cast<std::uint64_t>(epoch),
                                         static_cast<std::uint64_t>(idx)});
        augment_patch(image, mask, aug);
      }
      for (std::size_t k = 0; k < image.size(); ++k)
        batch[j * image.size() + k] = static_cast<T>(image[k]);
      for (std::size_t k = 0; k < mask.size(); ++k)
        labels[j * mask.size() + k] =
            static_cast<std::uint8_t>(ClassIndexMap::index_of(mask[k]));
    }
    const Tensor<T> target = one_hot<T>(labels, net.config().n_classes);
    if (opt) {
      net.zero_grad();
      Tensor<T> probs = net.forward(batch, true);
      auto res = weighted_dice_loss(probs, target);
      require(std::isfinite(res.loss), ErrorKind::NonFiniteLoss,
              "loss became non-finite at epoch " + std::to_string(epoch));
      net.backward(res.grad);
      opt->step();
      loss_sum += res.loss * static_cast<double>(nb);
    } else {
      Tensor<T> probs = net.forward(batch, false);
      auto res = weighted_dice_loss(probs, target);
      loss_sum += res.loss * static_cast<double>(nb);
    }
    seen += nb;
  }
  return seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
}

}  // namespace detail

/// Trains a freshly initialized network on the given data. The reported
/// train_loss is the Dice data term averaged over the epoch's samples (the L2
/// penalty enters the gradients, not this number). Deterministic for a fixed
/// config: initialization, shuffling and augmentation each use substreams of
/// cfg.seed.
template <class T>
TrainHistory train_model(ResUNet<T>& net, const TrainData& data, const TrainConfig& cfg) {
  require(!data.train_idx.empty(), ErrorKind::TooFewSamples, "no training patches");
  require(cfg.epochs >= 1 && cfg.batch_size >= 1, ErrorKind::ConfigError,
          "epochs and batch size must be positive");
  net.build(cfg.net);
  Rng init = Rng::derive(cfg.seed, {streams::kInit});
  net.init(init);
  Adam<T> opt(net.parameters(), cfg.learning_rate, cfg.l2);

  TrainHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle = Rng::derive(cfg.seed, {streams::kEpoch, static_cast<std::uint64_t>(epoch)});
    std::vector<std::size_t> order = data.train_idx;
    shuffle.shuffle(order);
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = detail::run_batches(net, data, order, cfg, &opt, epoch);
    if (!data.val_idx.empty())
      stats.val_loss =
          detail::run_batches(net, data, data.val_idx, cfg, static_cast<Adam<T>*>(nullptr), epoch);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(stats);
  }
  return history;
}

inline nlohmann::json history_to_json(const TrainHistory& history) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : history.epochs) {
    nlohmann::json row{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"seconds", e.seconds}};
    if (e.val_loss)
      row["val_loss"] = *e.val_loss;
    else
      row["val_loss"] = nullptr;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace resunet
