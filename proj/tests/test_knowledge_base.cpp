#include <doctest.h>

#include <string>

#include "semshield/knowledge_base.hpp"

using namespace semshield;

namespace {

const std::string kMinimal = R"({
  "groups": [ {"name": "color", "values": ["red", "blue"]},
              {"name": "shape", "values": ["round", "square", "triangle"]} ],
  "classes": [ {"label": "a", "attributes": {"color": "red", "shape": "round"}},
               {"label": "b", "attributes": {"color": "blue", "shape": "triangle"}} ]
})";

KnowledgeBase bundled() { return KnowledgeBase::from_file(SEMSHIELD_DATA_DIR "/traffic_signs_kb.json"); }

void check_rejects(const std::string& doc, const std::string& needle) {
  try {
    load_kb(doc);
    FAIL("expected validation error for: " << needle);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("bundled traffic-sign knowledge base dimensions") {
  const auto kb = bundled();
  REQUIRE(kb.groups().size() == 5);
  const std::size_t sizes[] = {5, 4, 2, 29, 9};
  for (std::size_t g = 0; g < 5; ++g) CHECK(kb.groups()[g].values.size() == sizes[g]);
  CHECK(kb.num_classes() == 43);
  CHECK(kb.dim() == 49);
}

TEST_CASE("speed limit 60 encodes as round, red, not crossed out, number, 60") {
  const auto kb = bundled();
  const auto v = encode_class(kb, kb.class_index("speed limit 60"));
  auto hot = [&](std::size_t group, const std::string& value) {
    const auto& vals = kb.groups()[group].values;
    const auto idx = static_cast<std::size_t>(std::find(vals.begin(), vals.end(), value) - vals.begin());
    REQUIRE(idx < vals.size());
    return v(static_cast<Eigen::Index>(kb.offset(group) + idx));
  };
  CHECK(hot(0, "round") == 1.0);
  CHECK(hot(1, "red") == 1.0);
  CHECK(hot(2, "no") == 1.0);
  CHECK(hot(3, "number") == 1.0);
  CHECK(hot(4, "60") == 1.0);
  CHECK(v.sum() == 5.0);
}

TEST_CASE("minimal knowledge base") {
  const auto kb = load_kb(kMinimal);
  CHECK(kb.dim() == 5);
  CHECK(kb.offset(1) == 2);
  Vector expected(5);
  expected << 0, 1, 0, 0, 1;
  CHECK(encode_class(kb, 1) == expected);
  CHECK_THROWS_AS(encode_class(kb, 2), Error);
}

TEST_CASE("encoding has exactly one 1.0 per group segment") {
  const auto kb = bundled();
  for (std::size_t c = 0; c < kb.num_classes(); ++c) {
    const auto v = encode_class(kb, c);
    CHECK(v.sum() == static_cast<double>(kb.groups().size()));
    for (std::size_t g = 0; g < kb.groups().size(); ++g) {
      const auto seg = v.segment(static_cast<Eigen::Index>(kb.offset(g)),
                                 static_cast<Eigen::Index>(kb.groups()[g].values.size()));
      CHECK((seg.array() == 1.0).count() == 1);
      CHECK((seg.array() == 0.0).count() == seg.size() - 1);
    }
  }
}

TEST_CASE("annotate is row-wise encode_class") {
  const auto kb = load_kb(kMinimal);
  const std::vector<std::size_t> labels{0, 0, 1};
  const Matrix s = annotate(kb, labels);
  REQUIRE(s.rows() == 3);
  CHECK(s.row(0) == s.row(1));
  CHECK(s.row(2).transpose() == encode_class(kb, 1));

  const Matrix empty = annotate(kb, std::vector<std::size_t>{});
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 5);

  const std::vector<std::size_t> bad{0, 7};
  try {
    annotate(kb, bad);
    FAIL("expected index error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Index);
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }

  const auto traffic = bundled();
  const Matrix big = annotate(traffic, std::vector<std::size_t>(17, 42));
  CHECK(big.rows() == 17);
  CHECK(big.cols() == 49);
}

TEST_CASE("prototypes") {
  const auto kb = bundled();
  const auto protos = build_prototypes(kb);
  CHECK(protos.count() == 43);
  CHECK(protos.rows.cols() == 49);
  for (std::size_t i = 0; i < protos.count(); ++i) {
    CHECK(protos[i] == encode_class(kb, i));
    CHECK(protos.find(protos[i]) == static_cast<long>(i));
  }
  const auto small = build_prototypes(load_kb(kMinimal));
  CHECK(small.count() == 2);
  CHECK(small[0] != small[1]);
}

TEST_CASE("load_kb validation") {
  check_rejects(R"({"groups":[{"name":"color","values":["red","blue"]},{"name":"shape","values":["a","b"]}],
    "classes":[{"label":"x","attributes":{"shape":"a"}},{"label":"y","attributes":{"color":"red","shape":"b"}}]})",
                "no value for group color");
  check_rejects(R"({"groups":[{"name":"color","values":["red","blue"]}],
    "classes":[{"label":"x","attributes":{"color":"green"}},{"label":"y","attributes":{"color":"red"}}]})",
                "unknown value \"green\"");
  check_rejects(R"({"groups":[{"name":"color","values":["red","blue"]}],
    "classes":[{"label":"x","attributes":{"color":"blue"}},{"label":"x","attributes":{"color":"red"}}]})",
                "duplicate class label x");
  check_rejects(R"({"groups":[{"name":"color","values":["red","blue"]}],
    "classes":[{"label":"x","attributes":{"color":"red"}},{"label":"y","attributes":{"color":"red"}}]})",
                "share the same attributes");
  check_rejects(R"({"groups":[{"name":"color","values":["red"]}],
    "classes":[{"label":"x","attributes":{"color":"red"}},{"label":"y","attributes":{"color":"red"}}]})",
                "at least 2 values");
  check_rejects(R"({"groups":[{"name":"color","values":["red","red"]}],"classes":[]})", "duplicate value");
  check_rejects(R"({"groups":[{"name":"color","values":["red","blue"]}],
    "classes":[{"label":"x","attributes":{"color":"red"}}]})",
                "at least 2 classes");
  check_rejects(R"({"groups":[],"classes":[],"extra":1})", "unknown key \"extra\"");
  check_rejects(R"({"groups":[{"name":"color","values":["red","blue"]}],
    "classes":[{"label":"x","attributes":{"color":"red","size":"big"}},{"label":"y","attributes":{"color":"blue"}}]})",
                "unknown group size");
  check_rejects("not json", "not valid JSON");
}

TEST_CASE("load_kb is deterministic") {
  const auto a = load_kb(kMinimal), b = load_kb(kMinimal);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint().size() == 16);
  CHECK(bundled().fingerprint() != a.fingerprint());
  // Canonical form reloads to the same knowledge base.
  CHECK(load_kb(a.to_json()).fingerprint() == a.fingerprint());
}
