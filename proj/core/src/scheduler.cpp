#include "scenerouter/scheduler.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "scenerouter/error.hpp"
#include "scenerouter/metrics.hpp"
#include "scenerouter/numeric.hpp"

namespace scenerouter {

namespace {

double elapsed_us(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - since)
      .count();
}

std::string next_data_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (!body.empty() && body.front() != '#') return std::string(body);
  }
  return {};
}

}  // namespace

std::vector<double> EvidenceTable::global_ade() const {
  std::vector<double> out(experts(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t m = 0; m < experts(); ++m) {
    std::vector<double> weighted;
    std::size_t total = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (!present(c, m)) continue;
      weighted.push_back(ade[c][m] * static_cast<double>(counts[c][m]));
      total += counts[c][m];
    }
    if (total > 0) out[m] = pairwise_sum(weighted) / static_cast<double>(total);
  }
  return out;
}

void EvidenceTable::save(std::ostream& out) const {
  out << "# split=" << split_id << '\n';
  out << "cluster";
  for (const auto& name : expert_names) out << ',' << name << ",n_" << name;
  out << '\n';
  for (std::size_t c = 0; c < k; ++c) {
    out << c + 1;
    for (std::size_t m = 0; m < experts(); ++m) {
      out << ',' << (present(c, m) ? format_double(ade[c][m]) : std::string()) << ','
          << counts[c][m];
    }
    out << '\n';
  }
}

EvidenceTable EvidenceTable::load(std::istream& in) {
  EvidenceTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (body.starts_with("# split=")) {
      table.split_id = std::string(body.substr(8));
      continue;
    }
    if (body.front() == '#') continue;
    const auto fields = split(body, ',');
    if (header.empty()) {
      header = fields;
      if (header.empty() || header[0] != "cluster" || header.size() % 2 != 1) {
        throw Error(ErrorCode::kParseError, "bad evidence header", line_no);
      }
      for (std::size_t j = 1; j < header.size(); j += 2) table.expert_names.push_back(header[j]);
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kParseError, "evidence row has the wrong width", line_no);
    }
    long long cluster = 0;
    if (!parse_int(fields[0], cluster) ||
        cluster != static_cast<long long>(table.ade.size()) + 1) {
      throw Error(ErrorCode::kParseError, "evidence clusters must be listed in order", line_no);
    }
    std::vector<double> row(table.experts(), 0.0);
    std::vector<std::size_t> count_row(table.experts(), 0);
    for (std::size_t m = 0; m < table.experts(); ++m) {
      long long n = 0;
      if (!parse_int(fields[2 + 2 * m], n) || n < 0) {
        throw Error(ErrorCode::kParseError, "bad evidence count", line_no);
      }
      count_row[m] = static_cast<std::size_t>(n);
      if (n > 0 && !parse_double(fields[1 + 2 * m], row[m])) {
        throw Error(ErrorCode::kParseError, "bad evidence value", line_no);
      }
    }
    table.ade.push_back(std::move(row));
    table.counts.push_back(std::move(count_row));
  }
  if (header.empty()) throw Error(ErrorCode::kParseError, "empty evidence file");
  table.k = table.ade.size();
  return table;
}

SegmentErrors segment_errors(const ExpertPool& pool, std::span<const SceneWindow> windows,
                             std::size_t threads) {
  SegmentErrors errors(pool.size(), std::vector<std::vector<double>>(windows.size()));
  parallel_for(pool.size() * windows.size(), threads, [&](std::size_t job) {
    const std::size_t m = job / windows.size();
    const std::size_t w = job % windows.size();
    const auto& window = windows[w];
    const auto predictions = pool.at(m).predict(window);
    if (predictions.size() != window.segments.size()) {
      throw Error(ErrorCode::kLengthMismatch, pool.at(m).name() + " skipped agents");
    }
    auto& out = errors[m][w];
    out.resize(window.segments.size());
    for (std::size_t i = 0; i < window.segments.size(); ++i) {
      out[i] = segment_ade(predictions[i].predicted, window.segments[i].future);
    }
  });
  return errors;
}

EvidenceTable evidence_from_errors(const SegmentErrors& errors, const SegmentLabels& labels,
                                   std::size_t k, std::vector<std::string> expert_names) {
  if (errors.size() != expert_names.size() || expert_names.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "expert pool is empty or misaligned");
  }
  EvidenceTable table;
  table.k = k;
  table.expert_names = std::move(expert_names);
  table.ade.assign(k, std::vector<double>(table.experts(), 0.0));
  table.counts.assign(k, std::vector<std::size_t>(table.experts(), 0));
  std::size_t segments = 0;
  for (std::size_t m = 0; m < table.experts(); ++m) {
    std::vector<std::vector<double>> per_cluster(k);
    if (errors[m].size() != labels.size()) {
      throw Error(ErrorCode::kLengthMismatch, "labels do not cover the holdout windows");
    }
    for (std::size_t w = 0; w < labels.size(); ++w) {
      if (errors[m][w].size() != labels[w].size()) {
        throw Error(ErrorCode::kLengthMismatch, "labels do not cover the holdout segments");
      }
      for (std::size_t i = 0; i < labels[w].size(); ++i) {
        const int label = labels[w][i];
        if (label < 1 || static_cast<std::size_t>(label) > k) {
          throw Error(ErrorCode::kInvalidArgument, "cluster label out of range");
        }
        per_cluster[static_cast<std::size_t>(label - 1)].push_back(errors[m][w][i]);
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      table.counts[c][m] = per_cluster[c].size();
      if (!per_cluster[c].empty()) {
        table.ade[c][m] = pairwise_sum(per_cluster[c]) / static_cast<double>(per_cluster[c].size());
      }
      segments += per_cluster[c].size();
    }
  }
  if (segments == 0) throw Error(ErrorCode::kEmptyHoldout, "no held-out segments");
  return table;
}

EvidenceTable build_evidence(const ExpertPool& pool, std::span<const SceneWindow> windows,
                             const SegmentLabels& labels, std::size_t k, std::size_t threads) {
  if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, "expert pool is empty");
  if (windows.empty()) throw Error(ErrorCode::kEmptyHoldout, "no held-out windows");
  return evidence_from_errors(segment_errors(pool, windows, threads), labels, k, pool.names());
}

const PolicyEntry& PolicyTable::lookup(int cluster) const {
  if (cluster < 1 || static_cast<std::size_t>(cluster) > entries.size()) {
    throw Error(ErrorCode::kVersionMismatch,
                "label " + std::to_string(cluster) + " outside the policy table");
  }
  return entries[static_cast<std::size_t>(cluster - 1)];
}

void PolicyTable::save(std::ostream& out) const {
  out << "version," << version << '\n';
  out << "cluster_id,expert_index,expert_name,evidence_ade,sample_count,fallback_flag\n";
  for (const auto& e : entries) {
    out << e.cluster << ',' << e.expert_index << ',' << e.expert_name << ','
        << format_double(e.evidence_ade) << ',' << e.sample_count << ',' << (e.fallback ? 1 : 0)
        << '\n';
  }
}

PolicyTable PolicyTable::load(std::istream& in) {
  PolicyTable policy;
  const auto version_line = split(next_data_line(in), ',');
  long long version = 0;
  if (version_line.size() != 2 || version_line[0] != "version" ||
      !parse_int(version_line[1], version) || version < 1) {
    throw Error(ErrorCode::kVersionMismatch, "policy file lacks a version header");
  }
  policy.version = static_cast<std::size_t>(version);
  if (next_data_line(in).rfind("cluster_id,", 0) != 0) {
    throw Error(ErrorCode::kParseError, "bad policy header");
  }
  for (std::string line = next_data_line(in); !line.empty(); line = next_data_line(in)) {
    const auto f = split(line, ',');
    long long cluster = 0;
    long long index = 0;
    long long count = 0;
    long long flag = 0;
    PolicyEntry e;
    if (f.size() != 6 || !parse_int(f[0], cluster) || !parse_int(f[1], index) || index < 1 ||
        !parse_double(f[3], e.evidence_ade) || !parse_int(f[4], count) || count < 0 ||
        !parse_int(f[5], flag) ||
        cluster != static_cast<long long>(policy.entries.size()) + 1) {
      throw Error(ErrorCode::kParseError, "bad policy row: " + line);
    }
    e.cluster = static_cast<int>(cluster);
    e.expert_index = static_cast<std::size_t>(index);
    e.expert_name = f[2];
    e.sample_count = static_cast<std::size_t>(count);
    e.fallback = flag != 0;
    policy.entries.push_back(std::move(e));
  }
  return policy;
}

PolicyTable build_policy(const EvidenceTable& evidence, std::size_t version) {
  const auto global = evidence.global_ade();
  std::size_t global_best = evidence.experts();
  for (std::size_t m = 0; m < evidence.experts(); ++m) {
    if (std::isnan(global[m])) continue;
    if (global_best == evidence.experts() || global[m] < global[global_best]) global_best = m;
  }
  if (global_best == evidence.experts()) {
    throw Error(ErrorCode::kNoEvidence, "evidence table has no samples");
  }
  PolicyTable policy;
  policy.version = version;
  for (std::size_t c = 0; c < evidence.k; ++c) {
    PolicyEntry e;
    e.cluster = static_cast<int>(c + 1);
    std::size_t best = evidence.experts();
    for (std::size_t m = 0; m < evidence.experts(); ++m) {
      if (!evidence.present(c, m)) continue;
      if (best == evidence.experts() || evidence.ade[c][m] < evidence.ade[c][best]) best = m;
    }
    if (best == evidence.experts()) {
      e.fallback = true;
      best = global_best;
      e.evidence_ade = global[best];
      e.sample_count = 0;
    } else {
      e.evidence_ade = evidence.ade[c][best];
      e.sample_count = evidence.counts[c][best];
    }
    e.expert_index = best + 1;
    e.expert_name = evidence.expert_names[best];
    policy.entries.push_back(std::move(e));
  }
  return policy;
}

double policy_ade(const EvidenceTable& evidence, const PolicyTable& policy) {
  std::vector<double> weighted;
  std::size_t total = 0;
  for (std::size_t c = 0; c < evidence.k; ++c) {
    const std::size_t m = policy.lookup(static_cast<int>(c + 1)).expert_index - 1;
    if (!evidence.present(c, m)) continue;
    weighted.push_back(evidence.ade[c][m] * static_cast<double>(evidence.counts[c][m]));
    total += evidence.counts[c][m];
  }
  return total == 0 ? 0.0 : pairwise_sum(weighted) / static_cast<double>(total);
}

Registration register_expert(ExpertPool& pool, std::shared_ptr<const Expert> expert,
                             std::span<const SceneWindow> holdout, const SegmentLabels& labels,
                             const EvidenceTable& evidence, const PolicyTable& policy,
                             std::size_t threads) {
  if (pool.find(expert->name())) {
    throw Error(ErrorCode::kDuplicateExpertName,
                "expert '" + expert->name() + "' already exists");
  }
  if (holdout.empty()) throw Error(ErrorCode::kEmptyHoldout, "no held-out windows");
  ExpertPool single;
  single.add(expert);
  const auto column = build_evidence(single, holdout, labels, evidence.k, threads);
  pool.add(std::move(expert));

  Registration out{evidence, {}};
  out.evidence.expert_names.push_back(column.expert_names.front());
  for (std::size_t c = 0; c < evidence.k; ++c) {
    out.evidence.ade[c].push_back(column.ade[c][0]);
    out.evidence.counts[c].push_back(column.counts[c][0]);
  }
  out.policy = build_policy(out.evidence, policy.version + 1);
  return out;
}

std::vector<double> classifier_input(const SceneFeatureVector& z, const ClusterModel& model,
                                     bool encoded) {
  if (encoded) return model.embed(z);
  const auto v = z.values();
  return model.standardization.apply(v);
}

Router::Router(FeatureConfig features, ClusterModel cluster_model, SceneClassifier classifier,
               PolicyTable policy, ExpertPool pool, bool encoded_input)
    : features_(features),
      cluster_model_(std::move(cluster_model)),
      classifier_(std::move(classifier)),
      policy_(std::move(policy)),
      pool_(std::move(pool)),
      encoded_input_(encoded_input) {
  if (classifier_.k() != policy_.k()) {
    throw Error(ErrorCode::kVersionMismatch,
                "classifier has " + std::to_string(classifier_.k()) + " classes, policy " +
                    std::to_string(policy_.k()));
  }
  for (const auto& e : policy_.entries) {
    const auto slot = pool_.find(e.expert_name);
    if (!slot) {
      throw Error(ErrorCode::kVersionMismatch,
                  "policy expert '" + e.expert_name + "' is not in the pool");
    }
    pool_index_.push_back(*slot);
  }
}

RouteResult Router::route(const SceneWindow& window) const {
  RouteResult out;
  out.predictions.reserve(window.segments.size());
  out.decisions.reserve(window.segments.size());
  for (std::size_t i = 0; i < window.segments.size(); ++i) {
    RoutingDecision d;
    d.window_id = window.window_id;
    d.agent_id = window.segments[i].agent_id;

    auto start = std::chrono::steady_clock::now();
    const auto z = extract(window, i, features_);
    d.feature_us = elapsed_us(start);

    start = std::chrono::steady_clock::now();
    const auto x = classifier_input(z, cluster_model_, encoded_input_);
    d.probabilities = classifier_.predict_proba(x);
    d.predicted_label = static_cast<int>(argmax(d.probabilities)) + 1;
    d.classify_us = elapsed_us(start);

    const std::size_t slot = pool_index_[static_cast<std::size_t>(d.predicted_label - 1)];
    d.expert_index = slot + 1;
    d.expert_name = pool_.at(slot).name();
    start = std::chrono::steady_clock::now();
    out.predictions.push_back(pool_.at(slot).predict_segment(window, i));
    d.predict_us = elapsed_us(start);
    out.decisions.push_back(std::move(d));
  }
  return out;
}

RouteResult Router::route_with_labels(const SceneWindow& window,
                                      std::span<const int> labels) const {
  if (labels.size() != window.segments.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one label per segment required");
  }
  RouteResult out;
  for (std::size_t i = 0; i < window.segments.size(); ++i) {
    RoutingDecision d;
    d.window_id = window.window_id;
    d.agent_id = window.segments[i].agent_id;
    d.predicted_label = labels[i];
    const std::size_t slot = pool_index_[static_cast<std::size_t>(policy_.lookup(labels[i]).cluster - 1)];
    d.expert_index = slot + 1;
    d.expert_name = pool_.at(slot).name();
    out.predictions.push_back(pool_.at(slot).predict_segment(window, i));
    out.decisions.push_back(std::move(d));
  }
  return out;
}

void write_decisions_csv(std::ostream& out, std::span<const RoutingDecision> decisions,
                         bool include_latency) {
  out << "window_id,agent_id,predicted_label,expert_index,expert_name,probabilities";
  if (include_latency) out << ",feature_us,classify_us,predict_us";
  out << '\n';
  for (const auto& d : decisions) {
    out << d.window_id << ',' << d.agent_id << ',' << d.predicted_label << ',' << d.expert_index
        << ',' << d.expert_name << ',';
    for (std::size_t c = 0; c < d.probabilities.size(); ++c) {
      out << (c ? ";" : "") << format_double(d.probabilities[c]);
    }
    if (include_latency) {
      char buf[96];
      std::snprintf(buf, sizeof buf, ",%.3f,%.3f,%.3f", d.feature_us, d.classify_us,
                    d.predict_us);
      out << buf;
    }
    out << '\n';
  }
}

void write_predictions_csv(std::ostream& out, std::int64_t window_id,
                           std::span<const Prediction> predictions, bool header) {
  if (header) out << "window_id,agent_id,step,x,y\n";
  for (const auto& p : predictions) {
    for (std::size_t t = 0; t < p.predicted.size(); ++t) {
      out << window_id << ',' << p.agent_id << ',' << t + 1 << ','
          << format_double(p.predicted[t].x) << ',' << format_double(p.predicted[t].y) << '\n';
    }
  }
}

}  // namespace scenerouter
