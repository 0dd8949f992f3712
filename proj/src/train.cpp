#include "dtwin/train.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "dtwin/rng.hpp"

namespace dtwin {
namespace {

constexpr double kTol = 1e-12;     // strict-improvement margin on the objective
constexpr double kGiniTol = 1e-9;  // tie tolerance for greedy split scores
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kJointResplitCap = 200;  // row bound for the exhaustive joint re-split move

// ---------------------------------------------------------------- greedy ---

double gini_of(const std::vector<double>& counts, double total) {
  if (total <= 0) return 0.0;
  double s = 0.0;
  for (double c : counts) {
    const double p = c / total;
    s += p * p;
  }
  return total * (1.0 - s);
}

struct GreedyBest {
  bool found = false;
  double gini = 0.0;
  double balance = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

class GreedyBuilder {
 public:
  GreedyBuilder(const TrainData& d, const TrainConfig& cfg, std::vector<int> features)
      : d_(d), cfg_(cfg), features_(std::move(features)) {}

  std::vector<TreeNode> build() {
    std::vector<int> rows(d_.n);
    std::iota(rows.begin(), rows.end(), 0);
    build_node(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int build_node(std::vector<int> rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::vector<double> counts(d_.n_classes(), 0.0);
    for (int i : rows) counts[d_.y[i]] += d_.w[i];
    int present = 0;
    for (double c : counts) present += c > 0;
    GreedyBest best;
    // Split whenever impurity remains and the budgets allow, even at zero
    // Gini gain: stopping on gain alone would strand parity-style label
    // patterns at the root.
    if (depth < cfg_.max_depth && present > 1 &&
        static_cast<int>(rows.size()) >= 2 * cfg_.min_leaf)
      best = best_split(rows);
    if (!best.found) {
      nodes_[id].leaf = true;
      nodes_[id].counts = std::move(counts);
      return id;
    }
    std::vector<int> left, right;
    for (int i : rows)
      (d_.row(i)[best.feature] < best.threshold ? left : right).push_back(i);
    rows.clear();
    nodes_[id].leaf = false;
    nodes_[id].split = axis_split(best.feature, best.threshold);
    const int l = build_node(std::move(left), depth + 1);
    const int r = build_node(std::move(right), depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  GreedyBest best_split(const std::vector<int>& rows) const {
    GreedyBest best;
    const int nc = d_.n_classes();
    const std::size_t m = rows.size();
    std::vector<std::pair<double, int>> vals(m);
    std::vector<double> wl(nc), wr(nc);
    for (int f : features_) {
      for (std::size_t k = 0; k < m; ++k) vals[k] = {d_.row(rows[k])[f], rows[k]};
      std::sort(vals.begin(), vals.end());
      std::fill(wl.begin(), wl.end(), 0.0);
      std::fill(wr.begin(), wr.end(), 0.0);
      double wl_tot = 0.0, wr_tot = 0.0;
      for (const auto& [v, i] : vals) {
        wr[d_.y[i]] += d_.w[i];
        wr_tot += d_.w[i];
      }
      for (std::size_t g = 0; g < m;) {
        std::size_t h = g;
        while (h < m && vals[h].first == vals[g].first) {
          const int i = vals[h].second;
          wl[d_.y[i]] += d_.w[i];
          wl_tot += d_.w[i];
          wr[d_.y[i]] -= d_.w[i];
          wr_tot -= d_.w[i];
          ++h;
        }
        if (h == m) break;
        if (static_cast<int>(h) >= cfg_.min_leaf &&
            static_cast<int>(m - h) >= cfg_.min_leaf) {
          consider(best, gini_of(wl, wl_tot) + gini_of(wr, wr_tot),
                   std::abs(static_cast<double>(h) - static_cast<double>(m - h)),
                   f, 0.5 * (vals[h - 1].first + vals[h].first));
        }
        g = h;
      }
    }
    return best;
  }

  // Lower Gini wins; near-ties go to the more balanced split, then to the
  // first candidate in (feature, threshold) order.
  static void consider(GreedyBest& best, double gini, double balance, int f,
                       double thr) {
    if (!best.found) {
      best = {true, gini, balance, f, thr};
      return;
    }
    const double tol = kGiniTol * std::max(1.0, std::abs(best.gini));
    if (gini < best.gini - tol) {
      best = {true, gini, balance, f, thr};
    } else if (gini <= best.gini + tol && balance < best.balance) {
      best = {true, gini, balance, f, thr};
    }
  }

  const TrainData& d_;
  const TrainConfig& cfg_;
  std::vector<int> features_;
  std::vector<TreeNode> nodes_;
};

Tree greedy_with_features(const TrainData& d, const TrainConfig& cfg,
                          std::vector<int> features) {
  GreedyBuilder b(d, cfg, std::move(features));
  return Tree(b.build(), d.class_values, d.feature_names, cfg.target,
              cfg.prefer_higher_label);
}

// ---------------------------------------------------- sweep bookkeeping ---

// Weighted-misclassification bookkeeping while rows move between destination
// leaves ("slots"). Error is sum over slots of (total weight - heaviest class
// weight); a state is feasible when every slot holds at least min_rows rows.
class SlotSweep {
 public:
  SlotSweep(int n_slots, int n_labels, int min_rows)
      : L_(n_labels),
        min_rows_(min_rows),
        cnt_(n_slots, 0),
        wtot_(n_slots, 0.0),
        wmax_(n_slots, 0.0),
        wlab_(static_cast<std::size_t>(n_slots) * n_labels, 0.0),
        short_slots_(min_rows > 0 ? n_slots : 0) {}

  void add(int s, int y, double w) {
    if (++cnt_[s] == min_rows_) --short_slots_;
    const double err_before = wtot_[s] - wmax_[s];
    double& wl = wlab_[static_cast<std::size_t>(s) * L_ + y];
    wtot_[s] += w;
    wl += w;
    if (wl > wmax_[s]) wmax_[s] = wl;
    err_ += (wtot_[s] - wmax_[s]) - err_before;
  }

  void remove(int s, int y, double w) {
    if (cnt_[s]-- == min_rows_) ++short_slots_;
    const double err_before = wtot_[s] - wmax_[s];
    double& wl = wlab_[static_cast<std::size_t>(s) * L_ + y];
    const double was = wl;
    wtot_[s] -= w;
    wl -= w;
    if (was >= wmax_[s]) {
      const double* base = &wlab_[static_cast<std::size_t>(s) * L_];
      double m = 0.0;
      for (int c = 0; c < L_; ++c) m = std::max(m, base[c]);
      wmax_[s] = m;
    }
    err_ += (wtot_[s] - wmax_[s]) - err_before;
  }

  bool feasible() const { return short_slots_ == 0; }
  double error() const { return err_; }

 private:
  int L_;
  int min_rows_;
  std::vector<int> cnt_;
  std::vector<double> wtot_, wmax_, wlab_;
  int short_slots_;
  double err_ = 0.0;
};

struct AxisBest {
  bool found = false;
  double err = kInf;
  int feature = -1;
  double threshold = 0.0;
};

struct NormalizedSplit {
  Split split;
  bool swap = false;  // children exchange sides
};

// Scale so the largest |coefficient| is 1; a lone negative coefficient turns
// into a +1 axis split with swapped children.
NormalizedSplit normalized(std::vector<std::pair<int, double>> coeffs,
                           double threshold) {
  if (coeffs.size() == 1) {
    const double a = coeffs[0].second;
    return {axis_split(coeffs[0].first, threshold / a), a < 0};
  }
  double m = 0.0;
  for (const auto& [f, a] : coeffs) m = std::max(m, std::abs(a));
  Split s;
  s.coeffs = std::move(coeffs);
  for (auto& [f, a] : s.coeffs) a /= m;
  s.threshold = threshold / m;
  return {s, false};
}

// ----------------------------------------------------------- local search ---

class Searcher {
 public:
  Searcher(const TrainData& d, const TrainConfig& cfg, const Tree& init,
           std::uint64_t order_key, std::vector<double>* trace)
      : d_(d),
        cfg_(cfg),
        complexity_(cfg.effective_complexity(d.p)),
        wtot_(d.total_weight()),
        order_key_(order_key),
        trace_(trace) {
    load(init);
    repair();
  }

  Tree run() {
    for (int pass = 0; pass < cfg_.max_passes; ++pass) {
      std::vector<int> order;
      for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].alive) order.push_back(static_cast<int>(i));
      rng::Stream st(rng::key(order_key_, static_cast<std::uint64_t>(pass)));
      st.shuffle(order);
      bool any = false;
      for (int at : order) {
        if (!nodes_[at].alive) continue;
        any |= visit(at);
      }
      if (!any) break;
    }
    return result();
  }

 private:
  struct WNode {
    bool leaf = true;
    Split split;
    int left = -1, right = -1;
    int depth = 0;
    bool alive = true;
    std::vector<double> counts;  // leaves: weighted class counts after refit
    int rows = 0;                // leaves: routed row count after refit
  };

  struct Dest {
    int n_slots = 0;
    std::vector<int> left_dest, right_dest;  // per row of the visited node
  };

  // -- structure plumbing --

  void load(const Tree& t) {
    if (static_cast<int>(t.feature_names().size()) != d_.p)
      throw std::invalid_argument("initial tree feature count does not match data");
    if (t.label_values() != d_.class_values)
      throw std::invalid_argument("initial tree labels do not match data");
    if (t.depth() > cfg_.max_depth)
      throw std::invalid_argument("initial tree exceeds the depth budget");
    if (t.max_split_sparsity() > complexity_)
      throw std::invalid_argument("initial tree exceeds the sparsity budget");
    nodes_.clear();
    for (const TreeNode& n : t.nodes()) {
      WNode w;
      w.leaf = n.leaf;
      w.split = n.split;
      w.left = n.left;
      w.right = n.right;
      nodes_.push_back(std::move(w));
    }
    root_ = 0;
    set_depths(root_, 0);
  }

  void set_depths(int at, int depth) {
    nodes_[at].depth = depth;
    if (nodes_[at].leaf) return;
    set_depths(nodes_[at].left, depth + 1);
    set_depths(nodes_[at].right, depth + 1);
  }

  int leaf_for(int at, const double* x) const {
    while (!nodes_[at].leaf)
      at = nodes_[at].split.goes_right(x) ? nodes_[at].right : nodes_[at].left;
    return at;
  }

  void refit() {
    for (WNode& n : nodes_)
      if (n.alive && n.leaf) {
        n.counts.assign(d_.n_classes(), 0.0);
        n.rows = 0;
      }
    for (int i = 0; i < d_.n; ++i) {
      WNode& leaf = nodes_[leaf_for(root_, d_.row(i))];
      leaf.counts[d_.y[i]] += d_.w[i];
      leaf.rows += 1;
    }
  }

  static double leaf_error(const WNode& n) {
    double tot = 0.0, mx = 0.0;
    for (double c : n.counts) {
      tot += c;
      mx = std::max(mx, c);
    }
    return tot - mx;
  }

  double error() const {
    double e = 0.0;
    for (const WNode& n : nodes_)
      if (n.alive && n.leaf) e += leaf_error(n);
    return e;
  }

  int n_splits() const {
    int c = 0;
    for (const WNode& n : nodes_)
      if (n.alive && !n.leaf) ++c;
    return c;
  }

  double objective() const { return error() / wtot_ + cfg_.alpha * n_splits(); }

  void push_trace() {
    if (trace_) trace_->push_back(objective());
  }

  int parent_of(int child) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].alive && !nodes_[i].leaf &&
          (nodes_[i].left == child || nodes_[i].right == child))
        return static_cast<int>(i);
    return -1;
  }

  void kill_subtree(int at) {
    nodes_[at].alive = false;
    if (nodes_[at].leaf) return;
    kill_subtree(nodes_[at].left);
    kill_subtree(nodes_[at].right);
  }

  int subtree_splits(int at) const {
    if (nodes_[at].leaf) return 0;
    return 1 + subtree_splits(nodes_[at].left) + subtree_splits(nodes_[at].right);
  }

  std::vector<int> gather(int target) const {
    std::vector<int> rows;
    for (int i = 0; i < d_.n; ++i) {
      int at = root_;
      for (;;) {
        if (at == target) {
          rows.push_back(i);
          break;
        }
        if (nodes_[at].leaf) break;
        at = nodes_[at].split.goes_right(d_.row(i)) ? nodes_[at].right
                                                    : nodes_[at].left;
      }
    }
    return rows;
  }

  // Starting trees from other datasets or layouts can have leaves that see
  // too few rows here. Branches with an empty side are spliced out (routing
  // preserved exactly); deficient nonempty leaves collapse their parent.
  void repair() {
    for (;;) {
      refit();
      int bad = -1;
      for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].alive && nodes_[i].leaf && nodes_[i].rows < cfg_.min_leaf) {
          bad = static_cast<int>(i);
          break;
        }
      if (bad < 0) return;
      const int parent = parent_of(bad);
      if (parent < 0) return;  // root leaf: nothing left to restructure
      if (nodes_[bad].rows == 0) {
        const int other =
            nodes_[parent].left == bad ? nodes_[parent].right : nodes_[parent].left;
        const int grand = parent_of(parent);
        nodes_[parent].alive = false;
        kill_subtree(bad);
        if (grand < 0) {
          root_ = other;
          set_depths(root_, 0);
        } else {
          (nodes_[grand].left == parent ? nodes_[grand].left
                                        : nodes_[grand].right) = other;
          set_depths(other, nodes_[grand].depth + 1);
        }
      } else {
        make_leaf(parent, gather(parent));
      }
    }
  }

  void make_leaf(int at, const std::vector<int>& rows) {
    if (!nodes_[at].leaf) {
      kill_subtree(nodes_[at].left);
      kill_subtree(nodes_[at].right);
    }
    nodes_[at].leaf = true;
    nodes_[at].split = Split{};
    nodes_[at].left = nodes_[at].right = -1;
    nodes_[at].counts.assign(d_.n_classes(), 0.0);
    for (int i : rows) nodes_[at].counts[d_.y[i]] += d_.w[i];
    nodes_[at].rows = static_cast<int>(rows.size());
  }

  Dest make_dest(int at, const std::vector<int>& rows) const {
    Dest dst;
    std::vector<int> slot(nodes_.size(), -1);
    assign_slots(nodes_[at].left, slot, dst.n_slots);
    assign_slots(nodes_[at].right, slot, dst.n_slots);
    dst.left_dest.resize(rows.size());
    dst.right_dest.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double* xr = d_.row(rows[k]);
      dst.left_dest[k] = slot[leaf_for(nodes_[at].left, xr)];
      dst.right_dest[k] = slot[leaf_for(nodes_[at].right, xr)];
    }
    return dst;
  }

  void assign_slots(int at, std::vector<int>& slot, int& next) const {
    if (nodes_[at].leaf) {
      slot[at] = next++;
      return;
    }
    assign_slots(nodes_[at].left, slot, next);
    assign_slots(nodes_[at].right, slot, next);
  }

  // Exact weighted misclassification of the node's rows routed by `split`
  // (sides exchanged when `swap`) into fixed destination leaves; infinity
  // when any destination ends below min_leaf rows.
  double eval_candidate(const std::vector<int>& rows, const Dest& dst,
                        const Split& split, bool swap) const {
    const int L = d_.n_classes();
    std::vector<double> wlab(static_cast<std::size_t>(dst.n_slots) * L, 0.0);
    std::vector<int> cnt(dst.n_slots, 0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const int i = rows[k];
      bool right = split.goes_right(d_.row(i));
      if (swap) right = !right;
      const int s = right ? dst.right_dest[k] : dst.left_dest[k];
      ++cnt[s];
      wlab[static_cast<std::size_t>(s) * L + d_.y[i]] += d_.w[i];
    }
    double err = 0.0;
    for (int s = 0; s < dst.n_slots; ++s) {
      if (cnt[s] < cfg_.min_leaf) return kInf;
      double tot = 0.0, mx = 0.0;
      for (int c = 0; c < L; ++c) {
        const double v = wlab[static_cast<std::size_t>(s) * L + c];
        tot += v;
        mx = std::max(mx, v);
      }
      err += tot - mx;
    }
    return err;
  }

  // Best axis split routing `rows` between the fixed destinations; lowest
  // (feature, threshold) wins among error ties by iteration order.
  AxisBest best_axis(const std::vector<int>& rows, const Dest& dst) const {
    AxisBest best;
    const std::size_t m = rows.size();
    std::vector<std::pair<double, int>> vals(m);
    for (int f = 0; f < d_.p; ++f) {
      SlotSweep sweep(dst.n_slots, d_.n_classes(), cfg_.min_leaf);
      for (std::size_t k = 0; k < m; ++k) {
        sweep.add(dst.right_dest[k], d_.y[rows[k]], d_.w[rows[k]]);
        vals[k] = {d_.row(rows[k])[f], static_cast<int>(k)};
      }
      std::sort(vals.begin(), vals.end());
      for (std::size_t g = 0; g < m;) {
        std::size_t h = g;
        while (h < m && vals[h].first == vals[g].first) {
          const int k = vals[h].second;
          sweep.remove(dst.right_dest[k], d_.y[rows[k]], d_.w[rows[k]]);
          sweep.add(dst.left_dest[k], d_.y[rows[k]], d_.w[rows[k]]);
          ++h;
        }
        if (h == m) break;
        if (sweep.feasible() && sweep.error() < best.err)
          best = {true, sweep.error(), f,
                  0.5 * (vals[h - 1].first + vals[h].first)};
        g = h;
      }
    }
    return best;
  }

  // -- moves --

  bool visit(int at) {
    std::vector<int> rows = gather(at);
    if (rows.empty()) return false;
    bool changed = false;
    if (nodes_[at].leaf) {
      if (try_grow(at, rows)) {
        changed = true;
        if (complexity_ >= 2) refine_hyperplane(at, rows);
      }
    } else {
      changed |= try_collapse_or_axis(at, rows);
      if (!nodes_[at].leaf && complexity_ >= 2)
        changed |= refine_hyperplane(at, rows);
    }
    if (!changed) changed = try_joint_resplit(at, rows);
    return changed;
  }

  bool try_collapse_or_axis(int at, const std::vector<int>& rows) {
    const Dest dst = make_dest(at, rows);
    const double err_cur = eval_candidate(rows, dst, nodes_[at].split, false);

    std::vector<double> counts(d_.n_classes(), 0.0);
    double tot = 0.0;
    for (int i : rows) {
      counts[d_.y[i]] += d_.w[i];
      tot += d_.w[i];
    }
    const double err_collapse = tot - *std::max_element(counts.begin(), counts.end());
    const double d_collapse =
        (err_collapse - err_cur) / wtot_ - cfg_.alpha * subtree_splits(at);

    const AxisBest ax = best_axis(rows, dst);
    double d_axis = kInf;
    Split ax_split;
    if (ax.found) {
      ax_split = axis_split(ax.feature, ax.threshold);
      d_axis = (eval_candidate(rows, dst, ax_split, false) - err_cur) / wtot_;
    }

    if (d_collapse < -kTol && d_collapse <= d_axis) {
      make_leaf(at, rows);
      push_trace();
      return true;
    }
    if (d_axis < -kTol) {
      nodes_[at].split = ax_split;
      refit();
      push_trace();
      return true;
    }
    return false;
  }

  bool try_grow(int at, const std::vector<int>& rows) {
    if (nodes_[at].depth >= cfg_.max_depth) return false;
    if (static_cast<int>(rows.size()) < 2 * cfg_.min_leaf) return false;
    const double err_leaf = leaf_error(nodes_[at]);
    if (!(err_leaf > 0.0)) return false;

    Dest dst;
    dst.n_slots = 2;
    dst.left_dest.assign(rows.size(), 0);
    dst.right_dest.assign(rows.size(), 1);
    const AxisBest ax = best_axis(rows, dst);
    if (!ax.found) return false;
    const Split sp = axis_split(ax.feature, ax.threshold);
    const double err_new = eval_candidate(rows, dst, sp, false);
    if (!((err_new - err_leaf) / wtot_ + cfg_.alpha < -kTol)) return false;

    const int l = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const int r = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[l].depth = nodes_[r].depth = nodes_[at].depth + 1;
    nodes_[at].leaf = false;
    nodes_[at].split = sp;
    nodes_[at].left = l;
    nodes_[at].right = r;
    nodes_[at].counts.clear();
    nodes_[at].rows = 0;
    refit();
    push_trace();
    return true;
  }

  double subset_err(const std::vector<int>& rows) const {
    std::vector<double> counts(d_.n_classes(), 0.0);
    double tot = 0.0;
    for (int i : rows) {
      counts[d_.y[i]] += d_.w[i];
      tot += d_.w[i];
    }
    return tot - *std::max_element(counts.begin(), counts.end());
  }

  struct SideBest {
    double cost = kInf;  // error share plus alpha when a split is used
    bool split = false;
    Split sp;
  };

  // Exact best depth<=1 subtree (a leaf, or one axis split over two leaves)
  // for the given rows; infeasible sides keep an infinite cost. Ties prefer
  // the leaf so the rebuilt subtree never carries a free split.
  SideBest best_depth1(const std::vector<int>& rows) const {
    SideBest out;
    if (static_cast<int>(rows.size()) >= cfg_.min_leaf) out.cost = subset_err(rows) / wtot_;
    Dest dst;
    dst.n_slots = 2;
    dst.left_dest.assign(rows.size(), 0);
    dst.right_dest.assign(rows.size(), 1);
    const AxisBest ax = best_axis(rows, dst);
    if (ax.found) {
      const double c = ax.err / wtot_ + cfg_.alpha;
      if (c < out.cost - kTol) {
        out.cost = c;
        out.split = true;
        out.sp = axis_split(ax.feature, ax.threshold);
      }
    }
    return out;
  }

  // Joint re-split: at a node with exactly two levels of depth budget and a
  // small row set, choose a new axis split together with exact depth<=1
  // re-completions of both sides, exhaustively. Single-split moves get stuck
  // when the best subtree needs the node and its children changed at once;
  // at a fixpoint of this move no axis tree of depth <= 2 on the node's rows
  // beats the surviving subtree, which is what lets training match the
  // brute-force reference on small instances.
  bool try_joint_resplit(int at, const std::vector<int>& rows) {
    if (cfg_.max_depth - nodes_[at].depth != 2) return false;
    if (static_cast<int>(rows.size()) > kJointResplitCap) return false;
    if (static_cast<int>(rows.size()) < 2 * cfg_.min_leaf) return false;

    double cur;
    if (nodes_[at].leaf) {
      cur = leaf_error(nodes_[at]) / wtot_;
    } else {
      const Dest dst = make_dest(at, rows);
      cur = eval_candidate(rows, dst, nodes_[at].split, false) / wtot_ +
            cfg_.alpha * subtree_splits(at);
    }

    struct Choice {
      double cost = kInf;
      Split sp;
      SideBest left, right;
    } best;

    const std::size_t m = rows.size();
    std::vector<std::pair<double, int>> vals(m);
    std::vector<int> left, right;
    for (int f = 0; f < d_.p; ++f) {
      for (std::size_t k = 0; k < m; ++k) vals[k] = {d_.row(rows[k])[f], rows[k]};
      std::sort(vals.begin(), vals.end());
      for (std::size_t g = 0; g + 1 < m;) {
        std::size_t h = g;
        while (h < m && vals[h].first == vals[g].first) ++h;
        if (h == m) break;
        const double thr = 0.5 * (vals[h - 1].first + vals[h].first);
        left.clear();
        right.clear();
        for (std::size_t k = 0; k < h; ++k) left.push_back(vals[k].second);
        for (std::size_t k = h; k < m; ++k) right.push_back(vals[k].second);
        const SideBest lb = best_depth1(left);
        const SideBest rb = best_depth1(right);
        const double cost = lb.cost + rb.cost + cfg_.alpha;
        if (cost < best.cost - kTol) best = {cost, axis_split(f, thr), lb, rb};
        g = h;
      }
    }
    if (!(best.cost < cur - kTol)) return false;

    if (!nodes_[at].leaf) {
      kill_subtree(nodes_[at].left);
      kill_subtree(nodes_[at].right);
    }
    const int node_depth = nodes_[at].depth;
    const auto build_side = [&](const SideBest& side) {
      const int id = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      nodes_[id].depth = node_depth + 1;
      if (!side.split) return id;
      const int l = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      const int r = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      nodes_[l].depth = nodes_[r].depth = node_depth + 2;
      nodes_[id].leaf = false;
      nodes_[id].split = side.sp;
      nodes_[id].left = l;
      nodes_[id].right = r;
      return id;
    };
    const int l = build_side(best.left);
    const int r = build_side(best.right);
    nodes_[at].leaf = false;
    nodes_[at].split = best.sp;
    nodes_[at].left = l;
    nodes_[at].right = r;
    nodes_[at].counts.clear();
    nodes_[at].rows = 0;
    refit();
    push_trace();
    return true;
  }

  bool refine_hyperplane(int at, const std::vector<int>& rows) {
    Dest dst = make_dest(at, rows);
    bool any = false;
    for (int sweep = 0; sweep < 64; ++sweep) {
      bool improved = retune_threshold(at, rows, dst);
      for (int f = 0; f < d_.p; ++f) improved |= retune_coefficient(at, rows, dst, f);
      any |= improved;
      if (!improved) break;
    }
    return any;
  }

  // Best threshold (by sweep over sorted values) for fixed destinations with
  // per-row start sides; returns (found, machinery error, threshold).
  struct ThresholdBest {
    bool found = false;
    double err = kInf;
    double value = 0.0;
  };

  ThresholdBest sweep_threshold(const std::vector<int>& rows, const Dest& dst,
                                const std::vector<double>& values) const {
    ThresholdBest best;
    const std::size_t m = rows.size();
    SlotSweep sweep(dst.n_slots, d_.n_classes(), cfg_.min_leaf);
    std::vector<std::pair<double, int>> vals(m);
    for (std::size_t k = 0; k < m; ++k) {
      sweep.add(dst.right_dest[k], d_.y[rows[k]], d_.w[rows[k]]);
      vals[k] = {values[k], static_cast<int>(k)};
    }
    std::sort(vals.begin(), vals.end());
    for (std::size_t g = 0; g < m;) {
      std::size_t h = g;
      while (h < m && vals[h].first == vals[g].first) {
        const int k = vals[h].second;
        sweep.remove(dst.right_dest[k], d_.y[rows[k]], d_.w[rows[k]]);
        sweep.add(dst.left_dest[k], d_.y[rows[k]], d_.w[rows[k]]);
        ++h;
      }
      if (h == m) break;
      if (sweep.feasible() && sweep.error() < best.err)
        best = {true, sweep.error(), 0.5 * (vals[h - 1].first + vals[h].first)};
      g = h;
    }
    return best;
  }

  bool retune_threshold(int at, const std::vector<int>& rows, const Dest& dst) {
    const Split& cur = nodes_[at].split;
    const double err_cur = eval_candidate(rows, dst, cur, false);
    std::vector<double> proj(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k)
      proj[k] = cur.project(d_.row(rows[k]));
    const ThresholdBest tb = sweep_threshold(rows, dst, proj);
    if (!tb.found) return false;
    Split cand = cur;
    cand.threshold = tb.value;
    const double err_new = eval_candidate(rows, dst, cand, false);
    if (!((err_new - err_cur) / wtot_ < -kTol)) return false;
    nodes_[at].split = cand;
    refit();
    push_trace();
    return true;
  }

  bool retune_coefficient(int at, const std::vector<int>& rows, Dest& dst, int f) {
    const Split cur = nodes_[at].split;
    double a_cur = 0.0;
    bool present = false;
    for (const auto& [ff, a] : cur.coeffs)
      if (ff == f) {
        a_cur = a;
        present = true;
      }
    const double err_cur = eval_candidate(rows, dst, cur, false);

    double best_err = kInf;
    NormalizedSplit best;
    bool found = false;
    auto offer = [&](std::vector<std::pair<int, double>> coeffs, double threshold) {
      NormalizedSplit cand = normalized(std::move(coeffs), threshold);
      const double e = eval_candidate(rows, dst, cand.split, cand.swap);
      if (e < best_err) {
        best_err = e;
        best = std::move(cand);
        found = true;
      }
    };

    // Drop the coefficient entirely, re-tuning the threshold on the residual.
    if (present && cur.sparsity() >= 2) {
      std::vector<std::pair<int, double>> coeffs2;
      for (const auto& c : cur.coeffs)
        if (c.first != f) coeffs2.push_back(c);
      Split without;
      without.coeffs = coeffs2;
      std::vector<double> resid(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k)
        resid[k] = without.project(d_.row(rows[k]));
      const ThresholdBest tb = sweep_threshold(rows, dst, resid);
      if (tb.found && tb.err < err_cur) offer(coeffs2, tb.value);
    }

    // Line search over the coefficient value: rows flip sides at breakpoints
    // beta = (b - residual) / x_f, so candidates are midpoints between
    // consecutive distinct breakpoints plus one value beyond each extreme.
    if (present || cur.sparsity() + 1 <= complexity_) {
      std::vector<double> resid(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k)
        resid[k] = cur.project(d_.row(rows[k])) - a_cur * d_.row(rows[k])[f];
      struct Cross {
        double beta;
        int k;
      };
      std::vector<Cross> crossings;
      SlotSweep sweep(dst.n_slots, d_.n_classes(), cfg_.min_leaf);
      const double b = cur.threshold;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const double xv = d_.row(rows[k])[f];
        bool left;
        if (xv == 0.0) {
          left = resid[k] < b;
        } else {
          crossings.push_back({(b - resid[k]) / xv, static_cast<int>(k)});
          left = xv > 0.0;  // side as the coefficient goes to minus infinity
        }
        sweep.add(left ? dst.left_dest[k] : dst.right_dest[k], d_.y[rows[k]],
                  d_.w[rows[k]]);
      }
      if (!crossings.empty()) {
        std::sort(crossings.begin(), crossings.end(),
                  [](const Cross& a, const Cross& b2) {
                    return a.beta < b2.beta || (a.beta == b2.beta && a.k < b2.k);
                  });
        double mach_best = kInf;
        double mach_a = 0.0;
        bool mach_found = false;
        auto consider_value = [&](double a) {
          if (a == 0.0 || !std::isfinite(a)) return;
          if (sweep.feasible() && sweep.error() < mach_best) {
            mach_best = sweep.error();
            mach_a = a;
            mach_found = true;
          }
        };
        consider_value(crossings.front().beta - 1.0);
        for (std::size_t g = 0; g < crossings.size();) {
          std::size_t h = g;
          while (h < crossings.size() &&
                 crossings[h].beta == crossings[g].beta) {
            const int k = crossings[h].k;
            const double xv = d_.row(rows[k])[f];
            const int from = xv > 0.0 ? dst.left_dest[k] : dst.right_dest[k];
            const int to = xv > 0.0 ? dst.right_dest[k] : dst.left_dest[k];
            sweep.remove(from, d_.y[rows[k]], d_.w[rows[k]]);
            sweep.add(to, d_.y[rows[k]], d_.w[rows[k]]);
            ++h;
          }
          consider_value(h < crossings.size()
                             ? 0.5 * (crossings[g].beta + crossings[h].beta)
                             : crossings.back().beta + 1.0);
          g = h;
        }
        if (mach_found && mach_best < err_cur) {
          std::vector<std::pair<int, double>> coeffs2 = cur.coeffs;
          bool placed = false;
          for (auto& c : coeffs2)
            if (c.first == f) {
              c.second = mach_a;
              placed = true;
            }
          if (!placed) {
            coeffs2.emplace_back(f, mach_a);
            std::sort(coeffs2.begin(), coeffs2.end());
          }
          offer(std::move(coeffs2), b);
        }
      }
    }

    if (!found) return false;
    if (!((best_err - err_cur) / wtot_ < -kTol)) return false;
    if (best.swap) {
      std::swap(nodes_[at].left, nodes_[at].right);
      std::swap(dst.left_dest, dst.right_dest);
    }
    nodes_[at].split = best.split;
    refit();
    push_trace();
    return true;
  }

  // -- result --

  Tree result() {
    refit();
    std::vector<TreeNode> out;
    copy_node(root_, out);
    Tree t(std::move(out), d_.class_values, d_.feature_names, cfg_.target,
           cfg_.prefer_higher_label);
    return t;
  }

  int copy_node(int at, std::vector<TreeNode>& out) {
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    if (nodes_[at].leaf) {
      out[id].leaf = true;
      out[id].counts = nodes_[at].counts;
    } else {
      const Split sp = nodes_[at].split;
      const int l = copy_node(nodes_[at].left, out);
      const int r = copy_node(nodes_[at].right, out);
      out[id].leaf = false;
      out[id].split = sp;
      out[id].left = l;
      out[id].right = r;
    }
    return id;
  }

  const TrainData& d_;
  const TrainConfig& cfg_;
  int complexity_;
  double wtot_;
  std::uint64_t order_key_;
  std::vector<double>* trace_;
  std::vector<WNode> nodes_;
  int root_ = 0;
};

}  // namespace

// ------------------------------------------------------------- public API ---

void TrainConfig::validate() const {
  if (max_depth < 0) throw std::invalid_argument("max_depth must be nonnegative");
  if (max_split_complexity < 0)
    throw std::invalid_argument("max_split_complexity must be nonnegative");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must be finite and nonnegative");
  if (min_leaf < 1) throw std::invalid_argument("min_leaf must be at least 1");
  if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  if (max_passes < 1) throw std::invalid_argument("max_passes must be at least 1");
  if (target != "mu1" && target != "mu2" && target != "label")
    throw std::invalid_argument("target must be mu1, mu2, or label");
}

double TrainData::total_weight() const {
  double t = 0.0;
  for (double v : w) t += v;
  return t;
}

void TrainData::validate() const {
  if (n < 1 || p < 1) throw std::invalid_argument("training data is empty");
  if (x.size() != static_cast<std::size_t>(n) * p ||
      y.size() != static_cast<std::size_t>(n) || w.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("training data arrays have inconsistent sizes");
  if (feature_names.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("feature name count does not match p");
  if (class_values.empty()) throw std::invalid_argument("no class values");
  for (int yi : y)
    if (yi < 0 || yi >= n_classes())
      throw std::invalid_argument("class index out of range");
  for (double wi : w)
    if (!(wi > 0.0) || !std::isfinite(wi))
      throw std::invalid_argument("row weights must be positive and finite");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("features must be finite");
}

TrainData make_train_data(const Dataset& ds, const std::string& target) {
  if (target != "mu1" && target != "mu2" && target != "label")
    throw std::invalid_argument("target must be mu1, mu2, or label");
  std::vector<double> label_copy;
  if (target == "label") {
    label_copy.reserve(ds.label.size());
    for (int l : ds.label) label_copy.push_back(static_cast<double>(l));
  }
  const std::vector<double>& mu =
      target == "mu1" ? ds.mu1 : target == "mu2" ? ds.mu2 : label_copy;
  TrainData d;
  d.n = ds.n();
  d.p = ds.p();
  d.x = ds.x;
  d.w = ds.weight;
  d.feature_names = ds.feature_names;
  const std::set<double> vals(mu.begin(), mu.end());
  d.class_values.assign(vals.begin(), vals.end());
  d.y.reserve(mu.size());
  for (double v : mu) {
    const auto it = std::lower_bound(d.class_values.begin(), d.class_values.end(), v);
    d.y.push_back(static_cast<int>(it - d.class_values.begin()));
  }
  d.validate();
  return d;
}

io::json to_json(const TrainConfig& cfg) {
  return io::json{{"max_depth", cfg.max_depth},
                  {"max_split_complexity", cfg.max_split_complexity},
                  {"alpha", cfg.alpha},
                  {"min_leaf", cfg.min_leaf},
                  {"restarts", cfg.restarts},
                  {"max_passes", cfg.max_passes},
                  {"seed", cfg.seed},
                  {"prefer_higher_label", cfg.prefer_higher_label},
                  {"target", cfg.target}};
}

io::json TrainReport::to_json() const {
  return io::json{{"traces", traces},
                  {"objectives", objectives},
                  {"chosen_restart", chosen_restart},
                  {"objective", objective}};
}

double tree_error_rate(const Tree& t, const TrainData& d) {
  double bad = 0.0, tot = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const std::span<const double> xr(d.row(i), static_cast<std::size_t>(d.p));
    if (t.classify(xr) != d.y[i]) bad += d.w[i];
    tot += d.w[i];
  }
  return tot > 0 ? bad / tot : 0.0;
}

double tree_objective(const Tree& t, const TrainData& d, double alpha) {
  return tree_error_rate(t, d) + alpha * t.n_splits();
}

Tree greedy_tree(const TrainData& d, const TrainConfig& cfg) {
  d.validate();
  cfg.validate();
  std::vector<int> all(d.p);
  std::iota(all.begin(), all.end(), 0);
  return greedy_with_features(d, cfg, std::move(all));
}

Tree local_search(const TrainData& d, const TrainConfig& cfg, const Tree& init,
                  std::uint64_t order_key, std::vector<double>* trace) {
  d.validate();
  cfg.validate();
  Searcher s(d, cfg, init, order_key, trace);
  return s.run();
}

Tree train_tree(const TrainData& d, const TrainConfig& cfg, TrainReport* report) {
  d.validate();
  cfg.validate();
  const int R = cfg.restarts;
  const bool hyper = cfg.effective_complexity(d.p) >= 2;

  struct Outcome {
    Tree tree;
    double objective = 0.0;
    std::vector<double> trace;
  };
  auto run_restart = [&](int r) {
    std::vector<int> features;
    if (r == 0) {
      features.resize(d.p);
      std::iota(features.begin(), features.end(), 0);
    } else {
      rng::Stream st(rng::key(cfg.seed, rng::kGreedy, static_cast<std::uint64_t>(r)));
      for (int f = 0; f < d.p; ++f)
        if (st.next_u64() & 1) features.push_back(f);
      if (features.empty())
        features.push_back(static_cast<int>(st.below(static_cast<std::uint64_t>(d.p))));
    }
    Outcome out;
    Tree t = greedy_with_features(d, cfg, std::move(features));
    out.trace.push_back(tree_objective(t, d, cfg.alpha));
    TrainConfig axis_cfg = cfg;
    axis_cfg.max_split_complexity = 1;
    t = local_search(d, axis_cfg, t,
                     rng::key(cfg.seed, rng::kVisit, static_cast<std::uint64_t>(r), 1),
                     &out.trace);
    if (hyper)
      t = local_search(d, cfg, t,
                       rng::key(cfg.seed, rng::kVisit, static_cast<std::uint64_t>(r), 2),
                       &out.trace);
    out.objective = tree_objective(t, d, cfg.alpha);
    out.tree = std::move(t);
    return out;
  };

  std::vector<Outcome> outcomes(static_cast<std::size_t>(R));
  if (R == 1) {
    outcomes[0] = run_restart(0);
  } else {
    std::vector<std::future<Outcome>> futs;
    futs.reserve(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r)
      futs.push_back(std::async(std::launch::async, run_restart, r));
    for (int r = 0; r < R; ++r) outcomes[r] = futs[r].get();
  }

  int best = 0;
  for (int r = 1; r < R; ++r) {
    const Outcome& a = outcomes[r];
    const Outcome& b = outcomes[best];
    if (a.objective < b.objective - kTol ||
        (std::abs(a.objective - b.objective) <= kTol &&
         a.tree.n_splits() < b.tree.n_splits()))
      best = r;
  }

  if (report) {
    report->traces.clear();
    report->objectives.clear();
    for (Outcome& o : outcomes) {
      report->traces.push_back(std::move(o.trace));
      report->objectives.push_back(o.objective);
    }
    report->chosen_restart = best;
    report->objective = outcomes[best].objective;
  }

  Tree t = std::move(outcomes[best].tree);
  t.info()["training"] = io::json{{"max_depth", cfg.max_depth},
                                  {"max_split_complexity", cfg.max_split_complexity},
                                  {"alpha", cfg.alpha},
                                  {"min_leaf", cfg.min_leaf},
                                  {"restarts", R},
                                  {"seed", cfg.seed},
                                  {"target", cfg.target},
                                  {"chosen_restart", best},
                                  {"objective", outcomes[best].objective}};
  return t;
}

}  // namespace dtwin
