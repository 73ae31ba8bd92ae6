#include "scenerouter/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"
#include "scenerouter/random.hpp"

namespace scenerouter {

namespace {

// Score gap of the degenerate single-class model: p(other) ~ e^-40.
constexpr double kConstantMargin = 40.0;
constexpr double kHessianFloor = 1e-12;
constexpr double kMinGain = 1e-12;
constexpr int kMaxBacktracks = 20;

}  // namespace

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorCode::kInvalidArgument, "tree without nodes");
  for (const auto& n : nodes_) {
    if (!n.is_leaf()) {
      const auto size = static_cast<int>(nodes_.size());
      if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size) {
        throw Error(ErrorCode::kInvalidArgument, "tree child index out of range");
      }
    }
    if (!std::isfinite(n.threshold) || !std::isfinite(n.value)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite tree parameter");
    }
  }
}

double DecisionTree::evaluate(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes_[i].value;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

void BoostingParams::validate() const {
  if (!(val_fraction > 0.0 && val_fraction < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "val_fraction must lie in (0, 0.5)");
  }
  if (!(learning_rate > 0.0) || max_depth < 1 || min_samples_leaf < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "need learning_rate > 0, max_depth >= 1, min_samples_leaf >= 1");
  }
}

SceneClassifier::SceneClassifier(std::size_t k, std::size_t dim, double learning_rate,
                                 std::size_t max_depth, std::vector<double> base_scores,
                                 std::vector<std::vector<DecisionTree>> streams)
    : k_(k),
      dim_(dim),
      learning_rate_(learning_rate),
      max_depth_(max_depth),
      base_scores_(std::move(base_scores)),
      streams_(std::move(streams)) {
  if (base_scores_.size() != k_ || streams_.size() != k_) {
    throw Error(ErrorCode::kInvalidArgument, "classifier needs one stream per class");
  }
  for (const auto& s : streams_) {
    if (s.size() != streams_.front().size()) {
      throw Error(ErrorCode::kInvalidArgument, "class streams differ in round count");
    }
  }
}

SceneClassifier SceneClassifier::constant(std::size_t k, std::size_t dim, int label) {
  std::vector<double> base(k, -kConstantMargin);
  base[static_cast<std::size_t>(label - 1)] = 0.0;
  return SceneClassifier(k, dim, 0.0, 0, std::move(base),
                         std::vector<std::vector<DecisionTree>>(k));
}

std::vector<double> SceneClassifier::scores(std::span<const double> x) const {
  if (x.size() != dim_) throw Error(ErrorCode::kLengthMismatch, "classifier input dimension");
  std::vector<double> s = base_scores_;
  for (std::size_t c = 0; c < k_; ++c) {
    for (const auto& tree : streams_[c]) s[c] += tree.evaluate(x);
  }
  return s;
}

std::vector<double> SceneClassifier::predict_proba(std::span<const double> x) const {
  return softmax(scores(x));
}

int SceneClassifier::predict(std::span<const double> x) const {
  return static_cast<int>(argmax(predict_proba(x))) + 1;
}

void SceneClassifier::save(std::ostream& out) const {
  out << "scenerouter-classifier 1\n";
  out << "k " << k_ << '\n';
  out << "dim " << dim_ << '\n';
  out << "rounds " << rounds() << '\n';
  out << "depth " << max_depth_ << '\n';
  out << "learning_rate " << format_double(learning_rate_) << '\n';
  out << "base_scores";
  for (double b : base_scores_) out << ' ' << format_double(b);
  out << '\n';
  for (std::size_t r = 0; r < rounds(); ++r) {
    for (std::size_t c = 0; c < k_; ++c) {
      const auto& nodes = streams_[c][r].nodes();
      out << "tree " << r << ' ' << c + 1 << ' ' << nodes.size() << '\n';
      for (const auto& n : nodes) {
        out << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right
            << ' ' << format_double(n.value) << '\n';
      }
    }
  }
}

SceneClassifier SceneClassifier::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "scenerouter-classifier 1") {
    throw Error(ErrorCode::kVersionMismatch, "not a version-1 classifier");
  }
  std::size_t k = 0, dim = 0, rounds = 0, depth = 0;
  double lr = 0.0;
  std::vector<double> base;
  const auto read_key = [&](const char* key) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "truncated classifier");
    const auto fields = split_whitespace(line);
    if (fields.empty() || fields[0] != key) {
      throw Error(ErrorCode::kParseError, std::string("expected '") + key + "' in classifier");
    }
    return fields;
  };
  const auto number = [](const std::string& s) {
    double v = 0.0;
    if (!parse_double(s, v)) throw Error(ErrorCode::kParseError, "bad number '" + s + "'");
    return v;
  };
  k = static_cast<std::size_t>(number(read_key("k").at(1)));
  dim = static_cast<std::size_t>(number(read_key("dim").at(1)));
  rounds = static_cast<std::size_t>(number(read_key("rounds").at(1)));
  depth = static_cast<std::size_t>(number(read_key("depth").at(1)));
  lr = number(read_key("learning_rate").at(1));
  const auto base_fields = read_key("base_scores");
  for (std::size_t i = 1; i < base_fields.size(); ++i) base.push_back(number(base_fields[i]));
  std::vector<std::vector<DecisionTree>> streams(k, std::vector<DecisionTree>(rounds));
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const auto header = read_key("tree");
      if (header.size() != 4) throw Error(ErrorCode::kParseError, "bad tree header");
      const auto count = static_cast<std::size_t>(number(header[3]));
      std::vector<DecisionTree::Node> nodes(count);
      for (auto& n : nodes) {
        if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "truncated tree");
        const auto f = split_whitespace(line);
        if (f.size() != 5) throw Error(ErrorCode::kParseError, "bad tree node");
        n.feature = static_cast<int>(number(f[0]));
        n.threshold = number(f[1]);
        n.left = static_cast<int>(number(f[2]));
        n.right = static_cast<int>(number(f[3]));
        n.value = number(f[4]);
      }
      streams[c][r] = DecisionTree(std::move(nodes));
    }
  }
  return SceneClassifier(k, dim, lr, depth, std::move(base), std::move(streams));
}

double cross_entropy(const SceneClassifier& model, const Matrix& x, std::span<const int> labels) {
  std::vector<double> terms(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto s = model.scores(x[i]);
    const double peak = *std::max_element(s.begin(), s.end());
    double total = 0.0;
    for (double v : s) total += std::exp(v - peak);
    terms[i] = peak + std::log(total) - s[static_cast<std::size_t>(labels[i] - 1)];
  }
  return mean(terms);
}

namespace {

// log-sum-exp cross-entropy over a score matrix (rows x k).
double score_ce(const Matrix& scores, std::span<const int> labels,
                std::span<const std::size_t> rows) {
  std::vector<double> terms(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& s = scores[rows[r]];
    const double peak = *std::max_element(s.begin(), s.end());
    double total = 0.0;
    for (double v : s) total += std::exp(v - peak);
    terms[r] = peak + std::log(total) - s[static_cast<std::size_t>(labels[rows[r]] - 1)];
  }
  return mean(terms);
}

struct BuildNode {
  double sum_r = 0.0;
  double sum_h = 0.0;
  std::size_t count = 0;
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const std::size_t> train_rows,
              const std::vector<std::vector<std::size_t>>& sorted, const BoostingParams& params,
              std::size_t k)
      : x_(x), rows_(train_rows), sorted_(sorted), params_(params), k_(k) {}

  // residual[i], hessian[i] indexed by position in train_rows.
  DecisionTree fit(const std::vector<double>& residual, const std::vector<double>& hessian) {
    const std::size_t n = rows_.size();
    const std::size_t dim = x_.front().size();
    std::vector<BuildNode> nodes(1);
    std::vector<int> node_of(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      nodes[0].sum_r += residual[i];
      nodes[0].sum_h += hessian[i];
    }
    nodes[0].count = n;
    std::vector<int> frontier{0};

    for (std::size_t level = 0; level < params_.max_depth && !frontier.empty(); ++level) {
      const std::size_t m = nodes.size();
      std::vector<char> active(m, 0);
      for (int id : frontier) {
        if (nodes[static_cast<std::size_t>(id)].count >= 2 * params_.min_samples_leaf) {
          active[static_cast<std::size_t>(id)] = 1;
        }
      }
      std::vector<double> best_gain(m, kMinGain);
      std::vector<int> best_feature(m, -1);
      std::vector<double> best_threshold(m, 0.0);

      std::vector<double> left_r(m);
      std::vector<std::size_t> left_n(m);
      std::vector<double> last_value(m);
      for (std::size_t f = 0; f < dim; ++f) {
        std::fill(left_r.begin(), left_r.end(), 0.0);
        std::fill(left_n.begin(), left_n.end(), 0);
        for (std::size_t pos : sorted_[f]) {
          const int id = node_of[pos];
          if (id < 0 || !active[static_cast<std::size_t>(id)]) continue;
          const auto node = static_cast<std::size_t>(id);
          const double v = x_[rows_[pos]][f];
          if (left_n[node] >= params_.min_samples_leaf && v > last_value[node] &&
              nodes[node].count - left_n[node] >= params_.min_samples_leaf) {
            const double nl = static_cast<double>(left_n[node]);
            const double nr = static_cast<double>(nodes[node].count - left_n[node]);
            const double sl = left_r[node];
            const double sr = nodes[node].sum_r - sl;
            const double gain = sl * sl / nl + sr * sr / nr -
                                nodes[node].sum_r * nodes[node].sum_r /
                                    static_cast<double>(nodes[node].count);
            if (gain > best_gain[node]) {
              best_gain[node] = gain;
              best_feature[node] = static_cast<int>(f);
              best_threshold[node] = last_value[node];
            }
          }
          left_r[node] += residual[pos];
          ++left_n[node];
          last_value[node] = v;
        }
      }

      std::vector<int> next;
      for (int id : frontier) {
        const auto node = static_cast<std::size_t>(id);
        if (best_feature[node] < 0) continue;
        nodes[node].feature = best_feature[node];
        nodes[node].threshold = best_threshold[node];
        nodes[node].left = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[node].right = static_cast<int>(nodes.size());
        nodes.emplace_back();
        next.push_back(nodes[node].left);
        next.push_back(nodes[node].right);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const int id = node_of[i];
        if (id < 0) continue;
        const auto& parent = nodes[static_cast<std::size_t>(id)];
        if (parent.feature < 0) {
          node_of[i] = -1;  // settled in a leaf
          continue;
        }
        const int child = x_[rows_[i]][static_cast<std::size_t>(parent.feature)] <= parent.threshold
                              ? parent.left
                              : parent.right;
        node_of[i] = child;
        auto& c = nodes[static_cast<std::size_t>(child)];
        c.sum_r += residual[i];
        c.sum_h += hessian[i];
        ++c.count;
      }
      frontier = std::move(next);
    }
    return to_preorder(nodes);
  }

 private:
  DecisionTree to_preorder(const std::vector<BuildNode>& nodes) const {
    std::vector<DecisionTree::Node> out;
    out.reserve(nodes.size());
    const double newton_scale = static_cast<double>(k_ - 1) / static_cast<double>(k_);
    const auto emit = [&](auto&& self, std::size_t id) -> int {
      const auto& b = nodes[id];
      const int index = static_cast<int>(out.size());
      out.emplace_back();
      if (b.feature < 0) {
        double gamma = newton_scale * b.sum_r / std::max(b.sum_h, kHessianFloor);
        gamma = std::clamp(gamma, -params_.max_leaf_value, params_.max_leaf_value);
        out[static_cast<std::size_t>(index)].value = gamma;
        return index;
      }
      const int left = self(self, static_cast<std::size_t>(b.left));
      const int right = self(self, static_cast<std::size_t>(b.right));
      auto& n = out[static_cast<std::size_t>(index)];
      n.feature = b.feature;
      n.threshold = b.threshold;
      n.left = left;
      n.right = right;
      return index;
    };
    emit(emit, 0);
    return DecisionTree(std::move(out));
  }

  const Matrix& x_;
  std::span<const std::size_t> rows_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  const BoostingParams& params_;
  std::size_t k_;
};

DecisionTree scaled(const DecisionTree& tree, double factor) {
  auto nodes = tree.nodes();
  for (auto& n : nodes) {
    if (n.is_leaf()) n.value *= factor;
  }
  return DecisionTree(std::move(nodes));
}

void stratified_split(std::span<const int> labels, std::size_t k, double val_fraction,
                      std::uint64_t seed, std::vector<std::size_t>& train,
                      std::vector<std::size_t>& val) {
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i] - 1)].push_back(i);
  }
  Rng rng(derive_seed(seed, "classifier-split"));
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.index(i)]);
    }
    auto n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(members.size())));
    if (members.size() >= 1 && n_val >= members.size()) n_val = members.size() - 1;
    val.insert(val.end(), members.begin(), members.begin() + static_cast<long>(n_val));
    train.insert(train.end(), members.begin() + static_cast<long>(n_val), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
}

double accuracy_of(const ConfusionMatrix& confusion) {
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    for (std::size_t c = 0; c < confusion[r].size(); ++c) {
      total += confusion[r][c];
      if (r == c) hit += confusion[r][c];
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

Matrix gather(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(x[r]);
  return out;
}

std::vector<int> gather(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

}  // namespace

TrainResult train_classifier(const Matrix& x, std::span<const int> labels, std::size_t k,
                             const BoostingParams& params) {
  params.validate();
  if (x.empty() || x.size() != labels.size()) {
    throw Error(ErrorCode::kTooFewSamples, "classifier needs one label per non-empty row");
  }
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const std::size_t dim = x.front().size();
  std::vector<std::size_t> class_count(k, 0);
  for (int l : labels) {
    if (l < 1 || static_cast<std::size_t>(l) > k) {
      throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(l) + " out of range");
    }
    ++class_count[static_cast<std::size_t>(l - 1)];
  }

  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  stratified_split(labels, k, params.val_fraction, params.seed, train_rows, val_rows);
  // Tiny datasets may leave no validation rows; score on train instead.
  const std::vector<std::size_t>& eval_rows = val_rows.empty() ? train_rows : val_rows;

  TrainResult result;
  auto& report = result.report;
  report.n_train = train_rows.size();
  report.n_val = val_rows.size();

  const std::size_t distinct =
      static_cast<std::size_t>(std::count_if(class_count.begin(), class_count.end(),
                                             [](std::size_t c) { return c > 0; }));
  if (distinct == 1) {
    const int only = labels.front();
    result.model = SceneClassifier::constant(k, dim, only);
    const Matrix xt = gather(x, train_rows);
    const auto yt = gather(labels, train_rows);
    const Matrix xv = gather(x, eval_rows);
    const auto yv = gather(labels, eval_rows);
    report.initial_train_ce = cross_entropy(result.model, xt, yt);
    report.final_train_ce = report.initial_train_ce;
    report.final_val_ce = cross_entropy(result.model, xv, yv);
    report.train_ce_history = {report.final_train_ce};
    report.val_ce_history = {report.final_val_ce};
    report.confusion = confusion_matrix(result.model, xv, yv);
    report.val_accuracy = accuracy_of(report.confusion);
    report.warning = "single-class dataset: constant classifier for class " + std::to_string(only);
    return result;
  }

  std::vector<std::size_t> train_class_count(k, 0);
  for (std::size_t r : train_rows) ++train_class_count[static_cast<std::size_t>(labels[r] - 1)];
  std::vector<double> base(k);
  const double n_train = static_cast<double>(train_rows.size());
  for (std::size_t c = 0; c < k; ++c) {
    const double count = train_class_count[c] > 0 ? static_cast<double>(train_class_count[c]) : 0.5;
    base[c] = std::log(count / n_train);
  }

  // Presorted positions (into train_rows) per feature; stable on ties.
  std::vector<std::vector<std::size_t>> sorted(dim);
  for (std::size_t f = 0; f < dim; ++f) {
    auto& order = sorted[f];
    order.resize(train_rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x[train_rows[a]][f] < x[train_rows[b]][f];
    });
  }

  Matrix scores(x.size(), base);
  std::vector<std::size_t> all_rows(x.size());
  std::iota(all_rows.begin(), all_rows.end(), 0);

  std::vector<std::vector<DecisionTree>> streams(k);
  report.initial_train_ce = score_ce(scores, labels, train_rows);
  report.train_ce_history.push_back(report.initial_train_ce);
  report.val_ce_history.push_back(score_ce(scores, labels, eval_rows));
  std::size_t best_round = 0;
  double best_val = report.val_ce_history.back();

  TreeBuilder builder(x, train_rows, sorted, params, k);
  std::vector<double> residual(train_rows.size());
  std::vector<double> hessian(train_rows.size());
  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    Matrix probs(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) probs[i] = softmax(scores[train_rows[i]]);
    std::vector<DecisionTree> trees(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < train_rows.size(); ++i) {
        const double p = probs[i][c];
        const double target = labels[train_rows[i]] == static_cast<int>(c + 1) ? 1.0 : 0.0;
        residual[i] = target - p;
        hessian[i] = p * (1.0 - p);
      }
      trees[c] = builder.fit(residual, hessian);
    }
    // Per-row raw tree outputs, then backtrack the step until the training
    // loss does not rise.
    Matrix delta(x.size(), std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t c = 0; c < k; ++c) delta[i][c] = trees[c].evaluate(x[i]);
    }
    const double previous = report.train_ce_history.back();
    double step = params.learning_rate;
    Matrix candidate = scores;
    double candidate_ce = previous;
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxBacktracks; ++attempt) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t c = 0; c < k; ++c) candidate[i][c] = scores[i][c] + step * delta[i][c];
      }
      candidate_ce = score_ce(candidate, labels, train_rows);
      if (candidate_ce <= previous) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      step = 0.0;
      candidate = scores;
      candidate_ce = previous;
    }
    for (std::size_t c = 0; c < k; ++c) streams[c].push_back(scaled(trees[c], step));
    scores = std::move(candidate);
    report.train_ce_history.push_back(candidate_ce);
    report.val_ce_history.push_back(score_ce(scores, labels, eval_rows));
    if (report.val_ce_history.back() < best_val) {
      best_val = report.val_ce_history.back();
      best_round = round + 1;
    } else if (round + 1 - best_round >= params.early_stopping_rounds) {
      break;
    }
  }

  for (auto& stream : streams) stream.resize(best_round);
  report.train_ce_history.resize(best_round + 1);
  report.val_ce_history.resize(best_round + 1);
  report.rounds_kept = best_round;
  result.model =
      SceneClassifier(k, dim, params.learning_rate, params.max_depth, base, std::move(streams));
  report.final_train_ce = report.train_ce_history.back();
  report.final_val_ce = report.val_ce_history.back();
  const Matrix xv = gather(x, eval_rows);
  const auto yv = gather(labels, eval_rows);
  report.confusion = confusion_matrix(result.model, xv, yv);
  report.val_accuracy = accuracy_of(report.confusion);
  return result;
}

ConfusionMatrix confusion_matrix(const SceneClassifier& model, const Matrix& x,
                                 std::span<const int> labels) {
  const std::size_t k = model.k();
  ConfusionMatrix counts(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto truth = static_cast<std::size_t>(labels[i] - 1);
    const auto predicted = static_cast<std::size_t>(model.predict(x[i]) - 1);
    ++counts.at(truth).at(predicted);
  }
  return counts;
}

void write_train_report_csv(std::ostream& out, const TrainReport& report) {
  out << "metric,value\n";
  out << "initial_train_ce," << format_double(report.initial_train_ce) << '\n';
  out << "final_train_ce," << format_double(report.final_train_ce) << '\n';
  out << "final_val_ce," << format_double(report.final_val_ce) << '\n';
  out << "val_accuracy," << format_double(report.val_accuracy) << '\n';
  out << "rounds_kept," << report.rounds_kept << '\n';
  out << "n_train," << report.n_train << '\n';
  out << "n_val," << report.n_val << '\n';
  if (!report.warning.empty()) out << "warning," << report.warning << '\n';
  out << "round,train_ce,val_ce\n";
  for (std::size_t r = 0; r < report.train_ce_history.size(); ++r) {
    out << r << ',' << format_double(report.train_ce_history[r]) << ','
        << format_double(report.val_ce_history[r]) << '\n';
  }
}

void write_confusion_table(std::ostream& out, const ConfusionMatrix& confusion) {
  out << "true\\pred";
  for (std::size_t c = 0; c < confusion.size(); ++c) out << std::setw(8) << ("C" + std::to_string(c + 1));
  out << std::setw(10) << "recall" << '\n';
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    out << std::setw(9) << ("C" + std::to_string(r + 1));
    std::size_t row_total = 0;
    for (std::size_t c = 0; c < confusion[r].size(); ++c) {
      out << std::setw(8) << confusion[r][c];
      row_total += confusion[r][c];
    }
    const double recall = row_total == 0 ? 0.0
                                         : static_cast<double>(confusion[r][r]) /
                                               static_cast<double>(row_total);
    out << std::setw(10) << std::fixed << std::setprecision(3) << recall << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

}  // namespace scenerouter
