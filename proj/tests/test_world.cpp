#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "reczero/errors.hpp"
#include "reczero/world.hpp"

using namespace reczero;

namespace {

WorldConfig small() {
  WorldConfig c;
  c.n_users = 6;
  c.n_items = 30;
  c.interactions_per_user = 12;
  return c;
}

}  // namespace

TEST_CASE("quantize and grid helpers") {
  CHECK(quantize_rating(3.04) == doctest::Approx(3.0));
  CHECK(quantize_rating(3.06) == doctest::Approx(3.1));
  CHECK(quantize_rating(7.0) == 5.0);
  CHECK(quantize_rating(-2.0) == 1.0);
  CHECK(on_rating_grid(4.2));
  CHECK_FALSE(on_rating_grid(4.25));
  CHECK(rating_tenths(4.2) == 42);
}

TEST_CASE("rating rule clamps at the top of the scale") {
  UserProfile u;
  u.affinity.assign(16, 1.0);
  ItemMeta item;
  item.attributes = {0, 3, 5, 9};
  CHECK(noiseless_rating(u, item, 2.0) == 5.0);
  u.affinity.assign(16, 0.0);
  CHECK(noiseless_rating(u, item, 2.0) == 3.0);
  u.affinity[0] = u.affinity[3] = -1.0;
  // 3 + 2 * (-0.5) = 2.0
  CHECK(noiseless_rating(u, item, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("reviews mention attributes past the threshold") {
  UserProfile u;
  u.affinity = {0.5, -0.5, 0.2, -0.31};
  ItemMeta item;
  item.attributes = {0, 1, 2, 3};
  const Review r = render_review(u, item, 0.3);
  CHECK(r.liked == std::vector<int>{0});
  CHECK(r.disliked == std::vector<int>{1, 3});
}

TEST_CASE("generated world satisfies its invariants") {
  const WorldConfig c = small();
  const World w = generate_world(c, 5);
  CHECK(w.users.size() == 6);
  CHECK(w.items.size() == 30);
  std::set<std::string> titles;
  for (const auto& it : w.items) {
    CHECK(it.attributes.size() == static_cast<std::size_t>(c.attrs_per_item));
    CHECK(std::is_sorted(it.attributes.begin(), it.attributes.end()));
    CHECK(std::adjacent_find(it.attributes.begin(), it.attributes.end()) == it.attributes.end());
    for (int a : it.attributes) CHECK((a >= 0 && a < c.alphabet_size));
    titles.insert(it.title);
  }
  CHECK(titles.size() == w.items.size());
  for (const auto& u : w.users) {
    CHECK(u.affinity.size() == static_cast<std::size_t>(c.alphabet_size));
    for (double v : u.affinity) CHECK((v >= -1.0 && v <= 1.0));
  }
  CHECK(w.examples.size() ==
        static_cast<std::size_t>(c.n_users * (c.interactions_per_user - c.min_history)));
  for (const auto& ex : w.examples) {
    const auto n = ex.history.events.size();
    CHECK(n >= static_cast<std::size_t>(c.min_history));
    CHECK(n <= static_cast<std::size_t>(c.max_history));
    CHECK(on_rating_grid(ex.rating));
    CHECK((ex.rating >= 1.0 && ex.rating <= 5.0));
    const UserProfile& u = w.user(ex.history.user_id);
    for (const auto& ev : ex.history.events) {
      CHECK(ev.review == render_review(u, ev.item, c.review_threshold));
      CHECK(ev.item.item_id != ex.target.item_id);
    }
  }
}

TEST_CASE("zero noise makes every rating the noiseless rule") {
  WorldConfig c = small();
  c.noise_std = 0.0;
  const World w = generate_world(c, 9);
  for (const auto& ex : w.examples)
    CHECK(ex.rating == noiseless_rating(w.user(ex.history.user_id), ex.target, c.scale));
}

TEST_CASE("generation is deterministic per seed") {
  const World a = generate_world(small(), 77);
  const World b = generate_world(small(), 77);
  const World c = generate_world(small(), 78);
  CHECK(a.examples == b.examples);
  CHECK_FALSE(a.examples == c.examples);
}

TEST_CASE("config validation names the key") {
  WorldConfig c = small();
  c.attrs_per_item = 40;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "attrs_per_item");
  }
  c = small();
  c.noise_std = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("split partitions the examples") {
  const World w = generate_world(small(), 2);
  const Split s = split_dataset(w, 0.75, 0.25, 4);
  CHECK(s.train.size() + s.test.size() == w.examples.size());
  CHECK(s.train.size() == static_cast<std::size_t>(std::llround(0.75 * w.examples.size())));
  for (const auto& t : s.test)
    CHECK(std::find(s.train.begin(), s.train.end(), t) == s.train.end());
  CHECK_THROWS_AS(split_dataset(w, 0.5, 0.6, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset(std::vector<RatingExample>{}, 0.5, 0.5, 1), EmptyDatasetError);
}

TEST_CASE("jsonl and world files round-trip") {
  const World w = generate_world(small(), 3);
  const auto dir = std::filesystem::temp_directory_path() / "reczero_world_test";
  std::filesystem::create_directories(dir);
  export_jsonl(w.examples, dir / "ex.jsonl");
  CHECK(import_jsonl(dir / "ex.jsonl") == w.examples);
  export_world(w, dir / "world.json");
  const World back = import_world(dir / "world.json");
  CHECK(back.examples.empty());  // examples live in the jsonl files
  CHECK(back.config.seed == w.config.seed);
  CHECK(back.items == w.items);
  for (std::size_t i = 0; i < w.users.size(); ++i) CHECK(back.users[i].affinity == w.users[i].affinity);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed json lines report the line") {
  try {
    example_from_json("{\"user_id\": 1", 7);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
  }
}

TEST_CASE("attribute names") {
  CHECK(attr_name(12) == "attr_12");
  CHECK(parse_attr_name("attr_12") == 12);
  CHECK(parse_attr_name("attr_") == -1);
  CHECK(parse_attr_name("item_3") == -1);
}
