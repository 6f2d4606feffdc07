// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "reczero/errors.hpp"
#include "reczero/rng.hpp"

namespace reczero {

using nlohmann::json;

double quantize_rating(double value) {
  const double clamped = std::clamp(value, kRatingMin, kRatingMax);
  return static_cast<double>(std::llround(clamped * 10.0)) / 10.0;
}

bool on_rating_grid(double value) {
  return std::abs(value * 10.0 - std::round(value * 10.0)) < 1e-8;
}

int rating_tenths(double value) { return static_cast<int>(std::llround(value * 10.0)); }

void WorldConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(what, key);
  };
  require(n_users > 0, "n_users", "must be positive");
  require(n_items > 0, "n_items", "must be positive");
  require(alphabet_size > 0, "alphabet_size", "must be positive");
  require(attrs_per_item > 0, "attrs_per_item", "must be positive");
  require(attrs_per_item <= alphabet_size, "attrs_per_item", "must not exceed alphabet_size");
  require(min_history >= 1, "min_history", "must be at least 1");
  require(max_history >= min_history, "max_history", "must be >= min_history");
  require(interactions_per_user > min_history, "interactions_per_user",
          "must exceed min_history");
  require(interactions_per_user <= n_items, "interactions_per_user", "must not exceed n_items");
  require(std::isfinite(scale) && scale >= 0.0, "scale", "must be finite and >= 0");
  require(std::isfinite(noise_std) && noise_std >= 0.0, "noise_std", "must be finite and >= 0");
  require(review_threshold >= 0.0 && review_threshold < 1.0, "review_threshold",
          "must lie in [0, 1)");
  require(kRatingMin < kRatingMax, "rating_range", "min must be below max");
}

double rating_from_affinity(const std::vector<double>& affinity, const ItemMeta& item,
                            double scale, double noise) {
  double sum = 0.0;
  for (int a : item.attributes) sum += affinity.at(static_cast<std::size_t>(a));
  const double mean = sum / static_cast<double>(item.attributes.size());
  return quantize_rating(3.0 + scale * mean + noise);
}

double noiseless_rating(const UserProfile& user, const ItemMeta& item, double scale) {
  return rating_from_affinity(user.affinity, item, scale);
}

Review render_review(const UserProfile& user, const ItemMeta& item, double threshold) {
  Review r;
  for (int a : item.attributes) {
    const double v = user.affinity[static_cast<std::size_t>(a)];
    if (v > threshold) r.liked.push_back(a);
    if (v < -threshold) r.disliked.push_back(a);
  }
  return r;
}

namespace {

std::string make_title(int item_id, int n_items) {
  const int width = static_cast<int>(std::to_string(std::max(n_items - 1, 0)).size());
  std::string digits = std::to_string(item_id);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))),
                     '0') +
         digits;
}

// First k entries of a seeded shuffle of [0, n).
std::vector<int> sample_distinct(int n, int k, Rng& rng) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto span = static_cast<std::uint64_t>(n - i);
    const int j = i + static_cast<int>(rng() % span);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

}  // namespace

World generate_world(const WorldConfig& config, std::uint64_t seed) {
  config.validate();
  World world;
  world.config = config;
  world.config.seed = seed;
  Rng rng(seed);

  world.items.reserve(static_cast<std::size_t>(config.n_items));
  for (int i = 0; i < config.n_items; ++i) {
    ItemMeta item;
    item.item_id = i;
    item.title = make_title(i, config.n_items);
    item.attributes = sample_distinct(config.alphabet_size, config.attrs_per_item, rng);
    std::sort(item.attributes.begin(), item.attributes.end());
    world.items.push_back(std::move(item));
  }

  world.users.reserve(static_cast<std::size_t>(config.n_users));
  for (int u = 0; u < config.n_users; ++u) {
    UserProfile user;
    user.user_id = u;
    user.affinity.resize(static_cast<std::size_t>(config.alphabet_size));
    for (double& v : user.affinity) v = -1.0 + 2.0 * uniform01(rng);
    world.users.push_back(std::move(user));
  }

  std::normal_distribution<double> noise(0.0, config.noise_std > 0.0 ? config.noise_std : 1.0);
  for (const UserProfile& user : world.users) {
    const std::vector<int> order =
        sample_distinct(config.n_items, config.interactions_per_user, rng);
    std::vector<Interaction> events;
    events.reserve(order.size());
    for (int item_id : order) {
      const ItemMeta& item = world.items[static_cast<std::size_t>(item_id)];
      const double eps = config.noise_std > 0.0 ? noise(rng) : 0.0;
      Interaction ev;
      ev.item = item;
      ev.rating = rating_from_affinity(user.affinity, item, config.scale, eps);
      ev.review = render_review(user, item, config.review_threshold);
      events.push_back(std::move(ev));
    }
    for (int k = config.min_history; k < config.interactions_per_user; ++k) {
      RatingExample ex;
      ex.history.user_id = user.user_id;
      const int first = std::max(0, k - config.max_history);
      ex.history.events.assign(events.begin() + first, events.begin() + k);
      ex.target = events[static_cast<std::size_t>(k)].item;
      ex.rating = events[static_cast<std::size_t>(k)].rating;
      world.examples.push_back(std::move(ex));
    }
  }
  return world;
}

World generate_world(const WorldConfig& config) { return generate_world(config, config.seed); }

Split split_dataset(const std::vector<RatingExample>& examples, double train_fraction,
                    double test_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && test_fraction >= 0.0) ||
      std::abs(train_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("train and test fractions must be non-negative and sum to 1",
                      "split_fractions");
  }
  if (examples.empty()) throw EmptyDatasetError("cannot split an empty dataset");
  std::vector<std::size_t> idx(examples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
  Split split;
  split.train.reserve(n_train);
  split.test.reserve(idx.size() - n_train);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < n_train ? split.train : split.test).push_back(examples[idx[i]]);
  }
  return split;
}

Split split_dataset(const World& world, double train_fraction, double test_fraction,
                    std::uint64_t seed) {
  return split_dataset(world.examples, train_fraction, test_fraction, seed);
}

std::string attr_name(int attribute) { return "attr_" + std::to_string(attribute); }

int parse_attr_name(const std::string& name) {
  if (name.size() < 6 || name.compare(0, 5, "attr_") != 0) return -1;
  int value = 0;
  for (std::size_t i = 5; i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9') return -1;
    value = value * 10 + (name[i] - '0');
    if (value > 1'000'000) return -1;
  }
  return value;
}

namespace {

std::string review_text(const Review& r) {
  std::string s = "liked";
  for (int a : r.liked) s += " " + attr_name(a);
  s += " disliked";
  for (int a : r.disliked) s += " " + attr_name(a);
  return s;
}

Review parse_review(const std::string& text) {
  std::istringstream is(text);
  std::string word;
  Review r;
  int section = -1;
  while (is >> word) {
    if (word == "liked") {
      section = 0;
    } else if (word == "disliked") {
      section = 1;
    } else {
      const int a = parse_attr_name(word);
      if (a < 0 || section < 0) throw std::invalid_argument("bad review token '" + word + "'");
      (section == 0 ? r.liked : r.disliked).push_back(a);
    }
  }
  if (section != 1) throw std::invalid_argument("review must contain 'liked' and 'disliked'");
  return r;
}

json item_json(const ItemMeta& item) {
  json attrs = json::array();
  for (int a : item.attributes) attrs.push_back(attr_name(a));
  return json{{"item_id", item.item_id}, {"title", item.title}, {"attributes", attrs}};
}

ItemMeta item_from(const json& j) {
  ItemMeta item;
  item.item_id = j.at("item_id").get<int>();
  item.title = j.at("title").get<std::string>();
  for (const auto& a : j.at("attributes")) {
    const int v = parse_attr_name(a.get<std::string>());
    if (v < 0) throw std::invalid_argument("bad attribute '" + a.get<std::string>() + "'");
    item.attributes.push_back(v);
  }
  return item;
}

}  // namespace

std::string example_to_json(const RatingExample& ex) {
  json history = json::array();
  for (const Interaction& ev : ex.history.events) {
    json h = item_json(ev.item);
    h["rating"] = ev.rating;
    h["review"] = review_text(ev.review);
    history.push_back(std::move(h));
  }
  json j{{"user_id", ex.history.user_id},
         {"history", std::move(history)},
         {"target", item_json(ex.target)},
         {"rating", ex.rating}};
  return j.dump();
}

RatingExample example_from_json(const std::string& line, std::size_t line_no) {
  try {
    const json j = json::parse(line);
    RatingExample ex;
    ex.history.user_id = j.at("user_id").get<int>();
    for (const auto& h : j.at("history")) {
      Interaction ev;
      ev.item = item_from(h);
      ev.rating = h.at("rating").get<double>();
      ev.review = parse_review(h.at("review").get<std::string>());
      ex.history.events.push_back(std::move(ev));
    }
    if (ex.history.events.empty()) throw std::invalid_argument("history must not be empty");
    ex.target = item_from(j.at("target"));
    ex.rating = j.at("rating").get<double>();
    return ex;
  } catch (const json::exception& e) {
    throw ParseError(e.what(), line_no);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line_no);
  }
}

void export_jsonl(const std::vector<RatingExample>& examples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PrerequisiteError("cannot write " + path.string());
  for (const RatingExample& ex : examples) out << example_to_json(ex) << '\n';
  if (!out) throw PrerequisiteError("write failed: " + path.string());
}

std::vector<RatingExample> import_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("cannot read " + path.string());
  std::vector<RatingExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(example_from_json(line, line_no));
  }
  return out;
}

void export_world(const World& world, const std::filesystem::path& path) {
  const WorldConfig& c = world.config;
  json cfg{{"n_users", c.n_users},
           {"n_items", c.n_items},
           {"alphabet_size", c.alphabet_size},
           {"attrs_per_item", c.attrs_per_item},
           {"min_history", c.min_history},
           {"max_history", c.max_history},
           {"interactions_per_user", c.interactions_per_user},
           {"scale", c.scale},
           {"noise_std", c.noise_std},
           {"review_threshold", c.review_threshold},
           {"seed", c.seed}};
  json items = json::array();
  for (const ItemMeta& item : world.items) items.push_back(item_json(item));
  json users = json::array();
  for (const UserProfile& u : world.users) {
    users.push_back(json{{"user_id", u.user_id}, {"affinity", u.affinity}});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PrerequisiteError("cannot write " + path.string());
  out << json{{"config", cfg}, {"items", items}, {"users", users}}.dump() << '\n';
}

World import_world(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("cannot read " + path.string());
  try {
    const json j = json::parse(in);
    World w;
    const json& c = j.at("config");
    w.config.n_users = c.at("n_users");
    w.config.n_items = c.at("n_items");
    w.config.alphabet_size = c.at("alphabet_size");
    w.config.attrs_per_item = c.at("attrs_per_item");
    w.config.min_history = c.at("min_history");
    w.config.max_history = c.at("max_history");
    w.config.interactions_per_user = c.at("interactions_per_user");
    w.config.scale = c.at("scale");
    w.config.noise_std = c.at("noise_std");
    w.config.review_threshold = c.at("review_threshold");
    w.config.seed = c.at("seed");
    for (const auto& item : j.at("items")) w.items.push_back(item_from(item));
    for (const auto& u : j.at("users")) {
      w.users.push_back(UserProfile{u.at("user_id").get<int>(),
                                    u.at("affinity").get<std::vector<double>>()});
    }
    return w;
  } catch (const json::exception& e) {
    throw ParseError(e.what(), 1);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 1);
  }
}

}  // namespace reczero
