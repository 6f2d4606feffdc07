// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace reczero {

inline constexpr double kRatingMin = 1.0;
inline constexpr double kRatingMax = 5.0;
inline constexpr double kRatingStep = 0.1;

// Rounds to the 0.1 grid and clamps to [1.0, 5.0].
double quantize_rating(double value);
// True if `value` lies on the 0.1 grid within 1e-9.
bool on_rating_grid(double value);
// Integer tenths (42 for 4.2); the exact comparison key for ratings.
int rating_tenths(double value);

struct WorldConfig {
  int n_users = 50;
  int n_items = 200;
  int alphabet_size = 16;
  int attrs_per_item = 4;
  int min_history = 3;
  int max_history = 6;
  // Chronological interactions per user; each position after the first
  // `min_history` becomes one RatingExample.
  int interactions_per_user = 83;
  double scale = 3.0;
  double noise_std = 0.1;
  // Reviews mention attributes whose affinity is above +threshold (liked) or
  // below -threshold (disliked).
  double review_threshold = 0.3;
  std::uint64_t seed = 42;

  void validate() const;  // throws ConfigError naming the key
};

struct ItemMeta {
  int item_id = 0;
  std::string title;
  std::vector<int> attributes;  // sorted, distinct attribute indices

  friend bool operator==(const ItemMeta&, const ItemMeta&) = default;
};

struct UserProfile {
  int user_id = 0;
  std::vector<double> affinity;  // one entry per attribute token, in [-1, 1]
};

struct Review {
  std::vector<int> liked;
  std::vector<int> disliked;

  friend bool operator==(const Review&, const Review&) = default;
};

struct Interaction {
  ItemMeta item;
  double rating = 3.0;
  Review review;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct InteractionHistory {
  int user_id = 0;
  std::vector<Interaction> events;  // oldest first

  friend bool operator==(const InteractionHistory&, const InteractionHistory&) = default;
};

struct RatingExample {
  InteractionHistory history;
  ItemMeta target;
  double rating = 3.0;

  friend bool operator==(const RatingExample&, const RatingExample&) = default;
};

struct World {
  WorldConfig config;
  std::vector<ItemMeta> items;
  std::vector<UserProfile> users;
  std::vector<RatingExample> examples;

  const UserProfile& user(int user_id) const { return users.at(static_cast<std::size_t>(user_id)); }
};

// Noiseless part of the rating rule: clamp(3 + scale * mean affinity) on the grid.
double noiseless_rating(const UserProfile& user, const ItemMeta& item, double scale);
// Rating from an arbitrary per-attribute affinity table.
double rating_from_affinity(const std::vector<double>& affinity, const ItemMeta& item,
                            double scale, double noise = 0.0);
Review render_review(const UserProfile& user, const ItemMeta& item, double threshold);

World generate_world(const WorldConfig& config, std::uint64_t seed);
World generate_world(const WorldConfig& config);  // uses config.seed

struct Split {
  std::vector<RatingExample> train;
  std::vector<RatingExample> test;
};

Split split_dataset(const World& world, double train_fraction, double test_fraction,
                    std::uint64_t seed);
Split split_dataset(const std::vector<RatingExample>& examples, double train_fraction,
                    double test_fraction, std::uint64_t seed);

// JSONL: one RatingExample per line.
std::string example_to_json(const RatingExample& example);
RatingExample example_from_json(const std::string& line, std::size_t line_no = 1);
void export_jsonl(const std::vector<RatingExample>& examples, const std::filesystem::path& path);
std::vector<RatingExample> import_jsonl(const std::filesystem::path& path);

// Items, users and config (the latents behind the examples) as one JSON document.
void export_world(const World& world, const std::filesystem::path& path);
World import_world(const std::filesystem::path& path);

std::string attr_name(int attribute);
int parse_attr_name(const std::string& name);  // -1 if not of the form attr_<n>

}  // namespace reczero
