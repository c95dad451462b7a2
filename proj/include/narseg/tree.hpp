#pragma once

// Decision trees over the site feature schema, the published segmentation
// tree, and the two on-disk tree formats.
//
// Indented text format (two spaces per level, tests at one level share a node):
//
//   if before = -sfc then non_boundary
//   elseif before = +sfc then
//     if duration <= 1.3 then non_boundary
//     elseif duration > 1.3 then boundary
//   else non_boundary                       (default for unseen values)
//
// "<feature> in {a,b,c}" groups several values on one branch.

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narseg/error.hpp"
#include "narseg/schema.hpp"
#include "narseg/text.hpp"

namespace narseg {

enum class NodeKind { leaf, categorical, threshold };

struct TreeNode {
  NodeKind kind = NodeKind::leaf;
  Label label = Label::non_boundary;  // leaf class; majority class on test nodes
  Feature feature = Feature::before;
  std::vector<std::vector<std::string>> value_sets;
  std::optional<Label> default_label;
  double threshold = 0.0;
  std::vector<TreeNode> children;  // categorical: one per value set; threshold: {<=, >}

  // Training statistics, not part of the tree's identity.
  double cases = 0.0;
  double errors = 0.0;

  bool operator==(const TreeNode& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
      case NodeKind::leaf: return label == o.label;
      case NodeKind::categorical:
        return feature == o.feature && value_sets == o.value_sets && default_label == o.default_label &&
               children == o.children;
      case NodeKind::threshold: return feature == o.feature && threshold == o.threshold && children == o.children;
    }
    return false;
  }
};

struct DecisionTree {
  TreeNode root;

  bool operator==(const DecisionTree&) const = default;
};

namespace tree {

inline TreeNode leaf(Label l) {
  TreeNode n;
  n.kind = NodeKind::leaf;
  n.label = l;
  return n;
}

struct Branch {
  std::vector<std::string> values;
  TreeNode child;
};

inline TreeNode categorical(Feature f, std::vector<Branch> branches, std::optional<Label> default_label = {}) {
  TreeNode n;
  n.kind = NodeKind::categorical;
  n.feature = f;
  n.default_label = default_label;
  for (auto& b : branches) {
    n.value_sets.push_back(std::move(b.values));
    n.children.push_back(std::move(b.child));
  }
  return n;
}

inline TreeNode threshold(Feature f, double t, TreeNode le, TreeNode gt) {
  TreeNode n;
  n.kind = NodeKind::threshold;
  n.feature = f;
  n.threshold = t;
  n.children.push_back(std::move(le));
  n.children.push_back(std::move(gt));
  return n;
}

inline std::size_t node_count(const TreeNode& n) {
  std::size_t c = 1;
  for (const auto& ch : n.children) c += node_count(ch);
  return c;
}

inline std::size_t leaf_count(const TreeNode& n) {
  if (n.kind == NodeKind::leaf) return 1;
  std::size_t c = 0;
  for (const auto& ch : n.children) c += leaf_count(ch);
  return c;
}

inline void collect_features(const TreeNode& n, std::vector<Feature>& out) {
  if (n.kind == NodeKind::leaf) return;
  if (std::find(out.begin(), out.end(), n.feature) == out.end()) out.push_back(n.feature);
  for (const auto& ch : n.children) collect_features(ch, out);
}

// Features tested anywhere in the tree, in schema order.
inline std::vector<Feature> tested_features(const DecisionTree& t) {
  std::vector<Feature> fs;
  collect_features(t.root, fs);
  std::sort(fs.begin(), fs.end());
  return fs;
}

namespace detail {

struct PathTest {
  NodeKind kind;
  Feature feature;
  std::vector<std::vector<std::string>> sets;
  double threshold;
  bool operator==(const PathTest&) const = default;
};

inline void validate(const TreeNode& n, std::vector<PathTest>& path) {
  switch (n.kind) {
    case NodeKind::leaf:
      if (!n.children.empty()) throw SchemaError("leaf node has children");
      return;
    case NodeKind::threshold:
      if (!is_continuous(n.feature))
        throw SchemaError("threshold test on categorical feature " + std::string(feature_name(n.feature)));
      if (!std::isfinite(n.threshold)) throw SchemaError("threshold must be finite");
      if (n.children.size() != 2) throw SchemaError("threshold test needs exactly two children");
      break;
    case NodeKind::categorical: {
      if (is_continuous(n.feature))
        throw SchemaError("categorical test on continuous feature " + std::string(feature_name(n.feature)));
      if (n.value_sets.empty() || n.value_sets.size() != n.children.size())
        throw SchemaError("categorical test needs one child per value set");
      std::vector<std::string> seen;
      for (const auto& set : n.value_sets) {
        if (set.empty()) throw SchemaError("empty value set on " + std::string(feature_name(n.feature)));
        for (const auto& v : set) {
          if (std::find(seen.begin(), seen.end(), v) != seen.end())
            throw SchemaError("value '" + v + "' appears on two branches of " + std::string(feature_name(n.feature)));
          seen.push_back(v);
        }
      }
      break;
    }
  }
  PathTest t{n.kind, n.feature, n.kind == NodeKind::categorical ? n.value_sets : decltype(n.value_sets){},
             n.kind == NodeKind::threshold ? n.threshold : 0.0};
  if (std::find(path.begin(), path.end(), t) != path.end())
    throw SchemaError("feature " + std::string(feature_name(n.feature)) + " tested twice identically on one path");
  path.push_back(t);
  for (const auto& ch : n.children) validate(ch, path);
  path.pop_back();
}

}  // namespace detail

// Throws SchemaError when a structural invariant does not hold.
inline void validate(const DecisionTree& t) {
  std::vector<detail::PathTest> path;
  detail::validate(t.root, path);
}

}  // namespace tree

// A feature value that no branch of the tree covers.
class UncoveredValue : public SchemaError {
public:
  UncoveredValue(Feature f, std::string value)
      : SchemaError("value '" + value + "' of feature " + std::string(feature_name(f)) + " is outside the tree's domain"),
        feature_(f),
        value_(std::move(value)) {}
  Feature feature() const { return feature_; }
  const std::string& value() const { return value_; }

private:
  Feature feature_;
  std::string value_;
};

inline Label classify(const DecisionTree& t, const FeatureVector& v) {
  const TreeNode* n = &t.root;
  while (n->kind != NodeKind::leaf) {
    if (n->kind == NodeKind::threshold) {
      n = &n->children[numeric_value(v, n->feature) <= n->threshold ? 0 : 1];
      continue;
    }
    const std::string value = categorical_value(v, n->feature);
    const TreeNode* next = nullptr;
    for (std::size_t k = 0; k < n->value_sets.size() && !next; ++k)
      if (std::find(n->value_sets[k].begin(), n->value_sets[k].end(), value) != n->value_sets[k].end())
        next = &n->children[k];
    if (!next) {
      if (n->default_label) return *n->default_label;
      throw UncoveredValue(n->feature, value);
    }
    n = next;
  }
  return n->label;
}

// The published learned segmentation tree. With expand_word1 the merged
// word1 value sets become one branch per value.
inline DecisionTree builtin_tree(bool expand_word1 = false) {
  using namespace tree;
  const Label B = Label::boundary, N = Label::non_boundary;

  std::vector<std::string> quiet = {"also", "basically", "because", "finally", "first", "like", "meanwhile", "no",
                                    "oh",   "okay",      "only",    "see",     "so",    "well", "where",     "NA"};
  std::vector<std::string> loud = {"anyway", "but", "now", "or", "then"};
  std::vector<Branch> word1_branches;
  if (expand_word1) {
    for (const auto& w : quiet) word1_branches.push_back({{w}, leaf(N)});
    for (const auto& w : loud) word1_branches.push_back({{w}, leaf(B)});
  } else {
    word1_branches.push_back({quiet, leaf(N)});
    word1_branches.push_back({loud, leaf(B)});
  }
  word1_branches.push_back({{"and"}, threshold(Feature::duration, 0.6, leaf(N), leaf(B))});

  TreeNode coref_plus = categorical(
      Feature::after, {{{"+sfc"}, threshold(Feature::duration, 1.3, leaf(N), leaf(B))},
                       {{"-sfc"}, categorical(Feature::word1, std::move(word1_branches))}});

  TreeNode cue_true = categorical(Feature::global_pro, {{{"NA"}, leaf(B)},
                                                        {{"-gp"}, leaf(B)},
                                                        {{"+gp"}, threshold(Feature::duration, 0.65, leaf(N), leaf(B))}});
  TreeNode cue_false =
      threshold(Feature::duration, 0.5, threshold(Feature::duration, 0.35, leaf(N), leaf(B)), leaf(N));

  TreeNode infer_minus = categorical(
      Feature::after, {{{"-sfc"}, leaf(B)},
                       {{"+sfc"}, categorical(Feature::cue1, {{{"true"}, std::move(cue_true)},
                                                              {{"false"}, std::move(cue_false)}})}});

  TreeNode coref_minus = categorical(Feature::infer, {{{"+infer"}, leaf(N)}, {{"NA"}, leaf(B)},
                                                      {{"-infer"}, std::move(infer_minus)}});

  TreeNode before_plus = categorical(Feature::coref, {{{"NA"}, leaf(N)},
                                                      {{"+coref"}, std::move(coref_plus)},
                                                      {{"-coref"}, std::move(coref_minus)}});

  return DecisionTree{categorical(Feature::before, {{{"-sfc"}, leaf(N)}, {{"+sfc"}, std::move(before_plus)}})};
}

// ---- indented text format ----

namespace detail {

inline std::string describe_test(const TreeNode& n, std::size_t branch) {
  std::string f(feature_name(n.feature));
  if (n.kind == NodeKind::threshold)
    return f + (branch == 0 ? " <= " : " > ") + text::shortest(n.threshold);
  const auto& set = n.value_sets[branch];
  if (set.size() == 1) return f + " = " + set[0];
  std::string s = f + " in {";
  for (std::size_t i = 0; i < set.size(); ++i) s += (i ? "," : "") + set[i];
  return s + "}";
}

inline void emit_text(const TreeNode& n, std::size_t depth, std::string& out) {
  const std::string indent(depth * 2, ' ');
  if (n.kind == NodeKind::leaf) {
    out += indent + std::string(label_name(n.label)) + "\n";
    return;
  }
  for (std::size_t k = 0; k < n.children.size(); ++k) {
    const auto& ch = n.children[k];
    out += indent + (k == 0 ? "if " : "elseif ") + describe_test(n, k) + " then";
    if (ch.kind == NodeKind::leaf) {
      out += " " + std::string(label_name(ch.label)) + "\n";
    } else {
      out += "\n";
      emit_text(ch, depth + 1, out);
    }
  }
  if (n.kind == NodeKind::categorical && n.default_label)
    out += indent + "else " + std::string(label_name(*n.default_label)) + "\n";
}

struct TextLine {
  std::size_t number;
  std::size_t indent;
  std::string body;
};

class TextParser {
public:
  explicit TextParser(std::vector<TextLine> lines) : lines_(std::move(lines)) {}

  TreeNode parse_root() {
    if (lines_.empty()) throw ParseError("empty tree file");
    TreeNode root = parse_block(lines_[0].indent);
    if (pos_ != lines_.size()) fail(lines_[pos_], "unexpected line after the tree");
    return root;
  }

private:
  [[noreturn]] static void fail(const TextLine& l, const std::string& msg) { throw ParseError(msg, l.number); }

  static Label parse_leaf_label(const TextLine& l, const std::string& s) {
    auto lab = parse_label(s);
    if (!lab) fail(l, "expected a class label, got '" + s + "'");
    return *lab;
  }

  struct Test {
    Feature feature;
    bool is_threshold = false;
    bool le = false;
    double threshold = 0.0;
    std::vector<std::string> values;
  };

  static Test parse_test(const TextLine& l, const std::string& s) {
    auto toks = text::split_ws(s);
    if (toks.size() < 3) fail(l, "malformed test '" + s + "'");
    auto f = parse_feature(toks[0]);
    if (!f) fail(l, "unknown feature '" + toks[0] + "'");
    Test t;
    t.feature = *f;
    const std::string& op = toks[1];
    std::string rhs;
    for (std::size_t i = 2; i < toks.size(); ++i) rhs += toks[i];
    if (op == "<=" || op == ">") {
      auto v = text::parse_double(rhs);
      if (!v) fail(l, "bad threshold '" + rhs + "'");
      t.is_threshold = true;
      t.le = op == "<=";
      t.threshold = *v;
      return t;
    }
    if (op == "=") {
      t.values.push_back(rhs);
    } else if (op == "in") {
      if (rhs.size() < 2 || rhs.front() != '{' || rhs.back() != '}') fail(l, "expected {v1,v2,...}");
      for (auto& v : text::split(std::string_view(rhs).substr(1, rhs.size() - 2), ','))
        if (!v.empty()) t.values.push_back(v);
      if (t.values.empty()) fail(l, "empty value set");
    } else {
      fail(l, "unknown operator '" + op + "'");
    }
    for (auto& v : t.values) {
      auto c = canonical_value(t.feature, v);
      if (!c) fail(l, "value '" + v + "' not in the domain of " + std::string(feature_name(t.feature)));
      v = *c;
    }
    return t;
  }

  // Branch child: either inline label after "then" or a deeper block.
  TreeNode parse_child(const TextLine& l, const std::string& after_then, std::size_t indent) {
    if (!after_then.empty()) return tree::leaf(parse_leaf_label(l, after_then));
    if (pos_ >= lines_.size() || lines_[pos_].indent <= indent) fail(l, "branch has no body");
    return parse_block(lines_[pos_].indent);
  }

  TreeNode parse_block(std::size_t indent) {
    const TextLine& first = lines_[pos_];
    if (first.indent != indent) fail(first, "inconsistent indentation");
    auto head = text::split_ws(first.body);
    if (head.size() == 1 && head[0] != "if") {
      ++pos_;
      return tree::leaf(parse_leaf_label(first, head[0]));
    }

    struct Arm {
      Test test;
      TreeNode child;
    };
    std::vector<Arm> arms;
    std::optional<Label> default_label;
    while (pos_ < lines_.size() && lines_[pos_].indent == indent) {
      const TextLine& l = lines_[pos_];
      std::string body = l.body;
      std::string kw = text::split_ws(body)[0];
      if (kw == "else") {
        if (arms.empty()) fail(l, "else without if");
        auto rest = text::split_ws(body);
        if (rest.size() != 2) fail(l, "expected: else <label>");
        default_label = parse_leaf_label(l, rest[1]);
        ++pos_;
        break;
      }
      if ((arms.empty() && kw != "if") || (!arms.empty() && kw != "elseif")) {
        if (kw == "if" && !arms.empty()) break;
        fail(l, "expected " + std::string(arms.empty() ? "if" : "elseif"));
      }
      // the value itself may be the cue word "then"
      std::size_t from = 0;
      for (int tok = 0; tok < 3 && from != std::string::npos; ++tok) {
        from = body.find_first_not_of(" \t", body.find_first_of(" \t", from));
      }
      auto then_pos = from == std::string::npos ? from : body.find(" then", from);
      if (then_pos == std::string::npos) fail(l, "missing 'then'");
      std::string test_src(text::trim(std::string_view(body).substr(kw.size(), then_pos - kw.size())));
      std::string after(text::trim(std::string_view(body).substr(then_pos + 5)));
      Test t = parse_test(l, test_src);
      if (!arms.empty() && t.feature != arms.front().test.feature)
        fail(l, "all branches of one test must use the same feature");
      if (!arms.empty() && t.is_threshold != arms.front().test.is_threshold)
        fail(l, "cannot mix threshold and value tests");
      ++pos_;
      TreeNode child = parse_child(l, after, indent);
      arms.push_back({std::move(t), std::move(child)});
    }
    if (arms.empty()) fail(first, "expected a test");

    if (arms.front().test.is_threshold) {
      if (arms.size() != 2 || arms[0].test.threshold != arms[1].test.threshold || arms[0].test.le == arms[1].test.le)
        fail(first, "threshold test needs one '<=' and one '>' branch on the same value");
      if (default_label) fail(first, "threshold tests take no else branch");
      bool le_first = arms[0].test.le;
      return tree::threshold(arms[0].test.feature, arms[0].test.threshold,
                             std::move(arms[le_first ? 0 : 1].child), std::move(arms[le_first ? 1 : 0].child));
    }
    std::vector<tree::Branch> branches;
    for (auto& a : arms) branches.push_back({std::move(a.test.values), std::move(a.child)});
    return tree::categorical(arms.front().test.feature, std::move(branches), default_label);
  }

  std::vector<TextLine> lines_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string emit_tree_text(const DecisionTree& t) {
  std::string out;
  detail::emit_text(t.root, 0, out);
  return out;
}

inline DecisionTree parse_tree_text(std::istream& in) {
  std::vector<detail::TextLine> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    std::size_t indent = 0;
    while (indent < line.size() && (line[indent] == ' ' || line[indent] == '\t')) ++indent;
    lines.push_back({number, indent, std::string(text::trim(line))});
  }
  DecisionTree t{detail::TextParser(std::move(lines)).parse_root()};
  try {
    tree::validate(t);
  } catch (const SchemaError& e) {
    throw ParseError(e.what());
  }
  return t;
}

inline DecisionTree parse_tree_text(std::string_view s) {
  std::istringstream in{std::string(s)};
  return parse_tree_text(in);
}

// ---- structured (JSON) format ----

namespace detail {

inline nlohmann::json node_to_json(const TreeNode& n) {
  using nlohmann::json;
  switch (n.kind) {
    case NodeKind::leaf: return json{{"leaf", label_name(n.label)}};
    case NodeKind::threshold:
      return json{{"feature", feature_name(n.feature)},
                  {"threshold", n.threshold},
                  {"le", node_to_json(n.children[0])},
                  {"gt", node_to_json(n.children[1])}};
    case NodeKind::categorical: {
      json branches = json::array();
      for (std::size_t k = 0; k < n.children.size(); ++k)
        branches.push_back(json{{"values", n.value_sets[k]}, {"node", node_to_json(n.children[k])}});
      json j{{"feature", feature_name(n.feature)}, {"branches", branches}};
      if (n.default_label) j["default"] = label_name(*n.default_label);
      return j;
    }
  }
  return {};
}

inline Label json_label(const nlohmann::json& j) {
  if (!j.is_string()) throw ParseError("tree label must be a string");
  auto l = parse_label(j.get<std::string>());
  if (!l) throw ParseError("unknown label '" + j.get<std::string>() + "'");
  return *l;
}

inline TreeNode node_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("tree node must be an object");
  if (j.contains("leaf")) return tree::leaf(json_label(j.at("leaf")));
  if (!j.contains("feature") || !j.at("feature").is_string()) throw ParseError("tree node lacks a feature");
  auto f = parse_feature(j.at("feature").get<std::string>());
  if (!f) throw ParseError("unknown feature '" + j.at("feature").get<std::string>() + "'");
  if (j.contains("threshold")) {
    if (!j.at("threshold").is_number() || !j.contains("le") || !j.contains("gt"))
      throw ParseError("threshold node needs numeric threshold, le and gt");
    return tree::threshold(*f, j.at("threshold").get<double>(), node_from_json(j.at("le")),
                           node_from_json(j.at("gt")));
  }
  if (!j.contains("branches") || !j.at("branches").is_array()) throw ParseError("categorical node needs branches");
  std::vector<tree::Branch> branches;
  for (const auto& b : j.at("branches")) {
    if (!b.is_object() || !b.contains("values") || !b.contains("node") || !b.at("values").is_array())
      throw ParseError("branch needs values and node");
    std::vector<std::string> values;
    for (const auto& v : b.at("values")) {
      if (!v.is_string()) throw ParseError("branch values must be strings");
      auto c = canonical_value(*f, v.get<std::string>());
      if (!c) throw ParseError("value '" + v.get<std::string>() + "' not in the domain of " +
                               std::string(feature_name(*f)));
      values.push_back(*c);
    }
    branches.push_back({std::move(values), node_from_json(b.at("node"))});
  }
  std::optional<Label> def;
  if (j.contains("default")) def = json_label(j.at("default"));
  return tree::categorical(*f, std::move(branches), def);
}

}  // namespace detail

inline nlohmann::json tree_to_json(const DecisionTree& t) {
  return nlohmann::json{{"format", "narseg-tree"}, {"version", 1}, {"root", detail::node_to_json(t.root)}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "narseg-tree" || !j.contains("root"))
    throw ParseError("not a narseg tree document");
  DecisionTree t{detail::node_from_json(j.at("root"))};
  try {
    tree::validate(t);
  } catch (const SchemaError& e) {
    throw ParseError(e.what());
  }
  return t;
}

inline std::string emit_tree_json(const DecisionTree& t) { return tree_to_json(t).dump(2) + "\n"; }

inline DecisionTree parse_tree_json(std::string_view s) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(s);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("tree JSON: ") + e.what());
  }
  return tree_from_json(j);
}

}  // namespace narseg
