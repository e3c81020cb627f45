#include "seupred/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "seupred/errors.hpp"
#include "seupred/rng.hpp"

namespace seupred {

namespace {

ModelSpec spec_for(const SeuDataset& ds, const ModelSpec& base) {
  ModelSpec spec = base;
  spec.time_win_size = ds.time_win_size;
  validate_spec(spec);
  return spec;
}

Tensor input_tensor(const SeuSample& s) {
  return Tensor({s.x.t, s.x.n, s.x.m}, s.x.x);
}

/// Confusion-matrix metrics of precomputed grid predictions on one mask.
Metrics metrics_from(const std::vector<int8_t>& preds, const SeuDataset& ds,
                     const std::vector<uint8_t>& mask) {
  Metrics m;
  for (size_t ti = 0; ti < ds.samples.size(); ++ti) {
    for (int ff = 0; ff < ds.graph.n; ++ff) {
      size_t c = ds.cell(ti, ff);
      if (!mask[c]) continue;
      int label = ds.samples[ti].labels[ff];
      if (label < 0) throw SpecInvalid("mask covers unlabeled cell " + std::to_string(c));
      int pred = preds[c];
      if (pred == 1 && label == 1) m.tp++;
      if (pred == 1 && label == 0) m.fp++;
      if (pred == 0 && label == 0) m.tn++;
      if (pred == 0 && label == 1) m.fn++;
    }
  }
  long total = m.tp + m.fp + m.tn + m.fn;
  if (total == 0) throw EmptyMask("metrics requested on a mask with no cells");
  m.precision_defined = m.tp + m.fp > 0;
  m.precision = m.precision_defined ? 100.0 * m.tp / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn > 0 ? 100.0 * m.tp / static_cast<double>(m.tp + m.fn) : 0.0;
  m.accuracy = 100.0 * (m.tp + m.tn) / static_cast<double>(total);
  return m;
}

struct Adam {
  double lr, b1, b2, eps;
  long t = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> state;

  /// False when any updated parameter left the reals (overflow makes the
  /// loss itself unreliable: relu clamps NaN activations to zero).
  bool step(std::map<std::string, Tensor>& params, const std::map<std::string, int>& ids,
            const TapeT<float>& tape) {
    ++t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    bool finite = true;
    for (auto& [name, p] : params) {
      const auto& g = tape.grad(ids.at(name)).data;
      auto& [m, v] = state[name];
      if (m.empty()) {
        m.assign(p.numel(), 0.0);
        v.assign(p.numel(), 0.0);
      }
      for (size_t i = 0; i < p.numel(); ++i) {
        double gi = static_cast<double>(g[i]);
        m[i] = b1 * m[i] + (1.0 - b1) * gi;
        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
        double update = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        p.data[i] = static_cast<float>(static_cast<double>(p.data[i]) - update);
        finite = finite && std::isfinite(p.data[i]);
      }
    }
    return finite;
  }
};

bool any_set(const std::vector<uint8_t>& m) {
  return std::any_of(m.begin(), m.end(), [](uint8_t b) { return b != 0; });
}

}  // namespace

std::vector<int8_t> predict_all(const ModelSpec& spec,
                                const std::map<std::string, Tensor>& params,
                                const SeuDataset& ds) {
  GraphIndex gi = graph_index(ds.graph);
  Tensor y = edge_feature_tensor<float>(ds.graph);
  std::vector<int8_t> preds(ds.grid_size(), 0);
  for (size_t ti = 0; ti < ds.samples.size(); ++ti) {
    Tape tape;
    auto ids = bind_params(tape, params);
    int y_id = tape.input(y);
    int x_id = tape.input(input_tensor(ds.samples[ti]));
    int logits = model_forward(tape, spec, gi, y_id, x_id, ids);
    const Tensor& out = tape.val(logits);
    for (int ff = 0; ff < ds.graph.n; ++ff)
      preds[ds.cell(ti, ff)] = out.data[ff * 2 + 1] > out.data[ff * 2] ? 1 : 0;
  }
  return preds;
}

Metrics evaluate(const ModelSpec& spec, const std::map<std::string, Tensor>& params,
                 const SeuDataset& ds, const std::vector<uint8_t>& mask) {
  if (mask.size() != ds.grid_size())
    throw ShapeMismatch("mask length does not match the dataset grid");
  if (!any_set(mask)) throw EmptyMask("evaluation mask selects no cells");
  return metrics_from(predict_all(spec, params, ds), ds, mask);
}

TrainResult train(const SeuDataset& ds, const TrainConfig& cfg) {
  validate_masks(ds);
  ModelSpec spec = spec_for(ds, cfg.model);
  TrainResult res;
  res.params = init_params(spec, ds.graph.c, cfg.seed);
  if (cfg.max_epochs <= 0) return res;
  if (!any_set(ds.masks.train)) throw EmptyMask("training mask selects no cells");
  const bool has_val = any_set(ds.masks.val);

  GraphIndex gi = graph_index(ds.graph);
  Tensor y = edge_feature_tensor<float>(ds.graph);

  // Per-time label rows and train-mask slices.
  const size_t num_times = ds.samples.size();
  std::vector<std::vector<int>> labels(num_times);
  std::vector<std::vector<uint8_t>> train_bits(num_times);
  for (size_t ti = 0; ti < num_times; ++ti) {
    labels[ti].assign(ds.graph.n, -1);
    train_bits[ti].assign(ds.graph.n, 0);
    for (int ff = 0; ff < ds.graph.n; ++ff) {
      labels[ti][ff] = ds.samples[ti].labels[ff];
      train_bits[ti][ff] = ds.masks.train[ds.cell(ti, ff)];
    }
  }

  Adam opt{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
  std::map<std::string, Tensor> params = res.params;
  Rng rng(cfg.seed);
  double best_val = -1.0;
  int stale = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng order_rng = rng.fork(static_cast<uint64_t>(epoch));
    std::vector<size_t> order = order_rng.permutation(num_times);
    double loss_sum = 0.0;
    int steps = 0;
    for (size_t k = 0; k < order.size(); ++k) {
      size_t ti = order[k];
      if (!any_set(train_bits[ti])) continue;
      Tape tape;
      auto ids = bind_params(tape, params);
      int y_id = tape.input(y);
      int x_id = tape.input(input_tensor(ds.samples[ti]));
      int logits = model_forward(tape, spec, gi, y_id, x_id, ids);
      int loss = tape.cross_entropy(logits, labels[ti], train_bits[ti]);
      double lv = static_cast<double>(tape.val(loss).data[0]);
      if (!std::isfinite(lv))
        throw Divergence("loss is not finite at epoch " + std::to_string(epoch) +
                         ", t_seu=" + std::to_string(ds.samples[ti].t_seu));
      tape.backward(loss);
      if (!opt.step(params, ids, tape))
        throw Divergence("parameters are not finite after epoch " + std::to_string(epoch) +
                         ", t_seu=" + std::to_string(ds.samples[ti].t_seu));
      loss_sum += lv;
      ++steps;
    }

    std::vector<int8_t> preds = predict_all(spec, params, ds);
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = steps ? loss_sum / steps : 0.0;
    st.train_acc = metrics_from(preds, ds, ds.masks.train).accuracy;
    st.val_acc = has_val ? metrics_from(preds, ds, ds.masks.val).accuracy : 0.0;
    res.history.push_back(st);

    if (has_val) {
      if (st.val_acc > best_val) {
        best_val = st.val_acc;
        res.params = params;
        res.best_epoch = epoch;
        res.best_val_acc = st.val_acc;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    } else {
      res.params = params;
      res.best_epoch = epoch;
    }
  }
  return res;
}

TuneResult tune(const Netlist& netlist, const WaveMatrix& wave, const FaultLabelSet& labels,
                const std::string& circuit, const TuneConfig& cfg) {
  if (cfg.max_distance_grid.empty() || cfg.time_win_grid.empty())
    throw SpecInvalid("hyperparameter grids must be non-empty");
  std::vector<int> mds = cfg.max_distance_grid;
  std::vector<int> wins = cfg.time_win_grid;
  std::sort(mds.begin(), mds.end());
  std::sort(wins.begin(), wins.end());

  struct Candidate {
    GridPoint point;
    SeuDataset ds;
    ModelSpec spec;
    std::map<std::string, Tensor> params;
  };
  std::vector<Candidate> cands;

  for (int md : mds) {
    SpatialGraph graph = build_spatial_graph(netlist, md, false, cfg.jobs);
    for (int win : wins) {
      BatchTensors batch = batch_feature_tensors(wave, labels.injection_times, win);
      if (batch.tensors.empty())
        throw SpecInvalid("time_win_size " + std::to_string(win) +
                          " leaves no usable injection times");
      Candidate c;
      c.ds = assemble(graph, batch.tensors, labels, circuit);
      c.ds.seed = cfg.train.seed;
      c.ds.masks = make_split(c.ds, cfg.split, cfg.train.seed);
      TrainResult tr = train(c.ds, cfg.train);
      c.spec = spec_for(c.ds, cfg.train.model);
      c.params = std::move(tr.params);
      c.point.max_distance = md;
      c.point.time_win_size = win;
      c.point.val = evaluate(c.spec, c.params, c.ds, c.ds.masks.val);
      cands.push_back(std::move(c));
    }
  }

  TuneResult res;
  for (const auto& c : cands) res.test_reads_before_selection += c.ds.masks.test_read_count();

  // Ascending grid order plus strict improvement = cheapest model wins ties.
  size_t best = 0;
  for (size_t i = 1; i < cands.size(); ++i)
    if (cands[i].point.val.accuracy > cands[best].point.val.accuracy) best = i;

  for (auto& c : cands) {
    c.point.test = evaluate(c.spec, c.params, c.ds, c.ds.masks.test());
    c.point.gap = c.point.val.accuracy - c.point.test.accuracy;
    res.grid.push_back(c.point);
  }

  res.best_max_distance = cands[best].point.max_distance;
  res.best_time_win = cands[best].point.time_win_size;
  res.val = cands[best].point.val;
  res.test = cands[best].point.test;
  res.params = std::move(cands[best].params);
  res.dataset = std::move(cands[best].ds);
  return res;
}

AggregateStats aggregate(const std::vector<double>& values) {
  AggregateStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / values.size();
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / (values.size() - 1));
  }
  return s;
}

std::string format_mean_std(const AggregateStats& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", s.mean, s.stddev);
  return buf;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw SpecInvalid("box stats need at least one value");
  std::sort(values.begin(), values.end());
  auto pct = [&](double p) {
    double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(rank);
    double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
  };
  BoxStats b;
  b.min = values.front();
  b.p25 = pct(25);
  b.median = pct(50);
  b.p75 = pct(75);
  b.max = values.back();
  return b;
}

TrainReport repeat_experiments(const Netlist& netlist, const WaveMatrix& wave,
                               const FaultLabelSet& labels, const std::string& circuit,
                               const TuneConfig& cfg, const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw SpecInvalid("repeat_experiments needs at least one seed");
  TrainReport report;
  std::vector<double> prec, rec, acc;
  for (uint64_t seed : seeds) {
    ExperimentResult ex;
    ex.seed = seed;
    TuneConfig c = cfg;
    c.train.seed = seed;
    try {
      TuneResult t = tune(netlist, wave, labels, circuit, c);
      ex.best_max_distance = t.best_max_distance;
      ex.best_time_win = t.best_time_win;
      ex.val = t.val;
      ex.test = t.test;
      for (const auto& p : t.grid) ex.gaps.push_back(p.gap);
      prec.push_back(t.test.precision);
      rec.push_back(t.test.recall);
      acc.push_back(t.test.accuracy);
      report.gaps.insert(report.gaps.end(), ex.gaps.begin(), ex.gaps.end());
    } catch (const Divergence&) {
      ex.diverged = true;
      ++report.diverged;
    }
    report.experiments.push_back(std::move(ex));
  }
  report.precision = aggregate(prec);
  report.recall = aggregate(rec);
  report.accuracy = aggregate(acc);
  if (!report.gaps.empty()) report.gap_box = box_stats(report.gaps);
  return report;
}

std::string report_table(const TrainReport& r) {
  std::string out;
  char buf[160];
  out += "seed        md  win  val_acc  test_acc  test_prec  test_rec\n";
  for (const auto& e : r.experiments) {
    if (e.diverged) {
      std::snprintf(buf, sizeof(buf), "%-10llu  diverged\n",
                    static_cast<unsigned long long>(e.seed));
      out += buf;
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%-10llu  %2d  %3d  %7.2f  %8.2f  %9.2f  %8.2f\n",
                  static_cast<unsigned long long>(e.seed), e.best_max_distance, e.best_time_win,
                  e.val.accuracy, e.test.accuracy, e.test.precision, e.test.recall);
    out += buf;
  }
  out += "accuracy " + format_mean_std(r.accuracy) + ", precision " +
         format_mean_std(r.precision) + ", recall " + format_mean_std(r.recall) + "\n";
  if (!r.gaps.empty()) {
    std::snprintf(buf, sizeof(buf),
                  "gap min %.2f  p25 %.2f  median %.2f  p75 %.2f  max %.2f  (n=%zu)\n",
                  r.gap_box.min, r.gap_box.p25, r.gap_box.median, r.gap_box.p75, r.gap_box.max,
                  r.gaps.size());
    out += buf;
  }
  return out;
}

}  // namespace seupred
