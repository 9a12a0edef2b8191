#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bubblesim/catalog.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/rng.hpp"

namespace bubblesim {

enum class RecommenderKind { kRandom, kPopularity, kItemKnn, kBprMf, kGraphProp };

inline const char* to_string(RecommenderKind kind) {
  switch (kind) {
    case RecommenderKind::kRandom: return "random";
    case RecommenderKind::kPopularity: return "popularity";
    case RecommenderKind::kItemKnn: return "item_knn";
    case RecommenderKind::kBprMf: return "bpr_mf";
    case RecommenderKind::kGraphProp: return "graph_prop";
  }
  return "?";
}

inline RecommenderKind recommender_kind_from(std::string_view name) {
  if (name == "random") return RecommenderKind::kRandom;
  if (name == "popularity") return RecommenderKind::kPopularity;
  if (name == "item_knn") return RecommenderKind::kItemKnn;
  if (name == "bpr_mf") return RecommenderKind::kBprMf;
  if (name == "graph_prop") return RecommenderKind::kGraphProp;
  throw ValidationError("unknown recommender kind '" + std::string(name) + "'");
}

struct RecommenderSpec {
  RecommenderKind kind = RecommenderKind::kBprMf;
  int latent_dim = 32;
  double learning_rate = 0.05;
  double regularization = 0.01;
  int epochs = 30;
  int neighbors = 50;        // item_knn neighbor list size
  int propagation_layers = 2;
  std::uint64_t seed = 0;
};

struct RankedPage {
  UserId user = 0;
  int round = 0;
  std::vector<ItemIndex> items;  // rank order, best first
  std::vector<double> scores;    // parallel to items, non-increasing
  int replacement_shortfall = 0;
};

// ---------------------------------------------------------------------------
// BPR pairwise objective. The SGD loop below uses these same functions, so a
// finite-difference check of the gradient validates the actual training math.
// Triple loss: -ln sigmoid(p.(qi - qj)) + reg/2 * (|p|^2 + |qi|^2 + |qj|^2).
// ---------------------------------------------------------------------------

inline double stable_softplus(double x) {
  // log(1 + e^x) without overflow for large |x|
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double bpr_triple_loss(const double* p, const double* qi, const double* qj, int dim, double reg) {
  double x = 0, np = 0, ni = 0, nj = 0;
  for (int f = 0; f < dim; ++f) {
    x += p[f] * (qi[f] - qj[f]);
    np += p[f] * p[f];
    ni += qi[f] * qi[f];
    nj += qj[f] * qj[f];
  }
  return stable_softplus(-x) + 0.5 * reg * (np + ni + nj);
}

inline void bpr_triple_gradient(const double* p, const double* qi, const double* qj, int dim, double reg,
                                double* gp, double* gqi, double* gqj) {
  double x = 0;
  for (int f = 0; f < dim; ++f) x += p[f] * (qi[f] - qj[f]);
  // d(-ln sigmoid(x))/dx = -sigmoid(-x)
  double neg_sig = -1.0 / (1.0 + std::exp(x));
  for (int f = 0; f < dim; ++f) {
    gp[f] = neg_sig * (qi[f] - qj[f]) + reg * p[f];
    gqi[f] = neg_sig * p[f] + reg * qi[f];
    gqj[f] = -neg_sig * p[f] + reg * qj[f];
  }
}

inline double bpr_triple_loss(const std::vector<double>& p, const std::vector<double>& qi,
                              const std::vector<double>& qj, double reg) {
  return bpr_triple_loss(p.data(), qi.data(), qj.data(), static_cast<int>(p.size()), reg);
}

struct BprTripleGrad {
  std::vector<double> user, pos, neg;
};

inline BprTripleGrad bpr_triple_gradient(const std::vector<double>& p, const std::vector<double>& qi,
                                         const std::vector<double>& qj, double reg) {
  BprTripleGrad g;
  g.user.resize(p.size());
  g.pos.resize(p.size());
  g.neg.resize(p.size());
  bpr_triple_gradient(p.data(), qi.data(), qj.data(), static_cast<int>(p.size()), reg, g.user.data(), g.pos.data(),
                      g.neg.data());
  return g;
}

// ---------------------------------------------------------------------------
// Fitted models
// ---------------------------------------------------------------------------

class FittedModel {
 public:
  virtual ~FittedModel() = default;

  RecommenderKind kind() const { return kind_; }
  int fit_round() const { return fit_round_; }
  std::size_t num_items() const { return popularity_.size(); }

  // True when the model carries user-specific state for this user.
  virtual bool knows_user(UserId user) const = 0;

  // Scores for every catalog item, higher is better. Only meaningful for
  // known users; callers wanting the cold-user fallback use scores_for().
  virtual std::vector<double> score_items(UserId user) const = 0;

  // Cold users fall back to global popularity so a page can always be built.
  std::vector<double> scores_for(UserId user) const {
    if (knows_user(user)) return score_items(user);
    return popularity_;
  }

  const std::vector<double>& popularity_counts() const { return popularity_; }

  // Top-k among items not flagged in `exclude`; ties broken by ascending
  // item index. Pages may be shorter than k near catalog exhaustion, but an
  // empty candidate pool is an error.
  RankedPage recommend(UserId user, int k, const ItemMask& exclude) const {
    if (k <= 0) throw ValidationError("page size must be positive");
    std::vector<double> scores = scores_for(user);
    std::vector<ItemIndex> candidates;
    candidates.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (i >= exclude.size() || !exclude[i]) candidates.push_back(static_cast<ItemIndex>(i));
    }
    if (candidates.empty()) {
      throw CatalogExhausted("no recommendable items remain for user " + std::to_string(user));
    }
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      [&scores](ItemIndex a, ItemIndex b) {
                        double sa = scores[static_cast<std::size_t>(a)];
                        double sb = scores[static_cast<std::size_t>(b)];
                        if (sa != sb) return sa > sb;
                        return a < b;
                      });
    candidates.resize(take);
    RankedPage page;
    page.user = user;
    page.items = std::move(candidates);
    page.scores.reserve(take);
    for (ItemIndex i : page.items) page.scores.push_back(scores[static_cast<std::size_t>(i)]);
    return page;
  }

 protected:
  FittedModel(RecommenderKind kind, int fit_round, std::vector<double> popularity)
      : kind_(kind), fit_round_(fit_round), popularity_(std::move(popularity)) {}

  RecommenderKind kind_;
  int fit_round_;
  std::vector<double> popularity_;  // interaction count per item
};

namespace detail {

inline std::vector<double> popularity_counts(const InteractionLog& log, std::size_t num_items) {
  std::vector<double> counts(num_items, 0.0);
  for (const LogEntry& e : log.entries()) counts[static_cast<std::size_t>(e.item)] += 1.0;
  return counts;
}

}  // namespace detail

// Seeded uniform shuffle; the "score" of an item is its position in a fresh
// per-user permutation, so repeated calls for one user agree with each other.
class RandomModel final : public FittedModel {
 public:
  RandomModel(int fit_round, std::vector<double> popularity, std::uint64_t seed)
      : FittedModel(RecommenderKind::kRandom, fit_round, std::move(popularity)), seed_(seed) {}

  bool knows_user(UserId) const override { return true; }

  std::vector<double> score_items(UserId user) const override {
    std::size_t n = num_items();
    std::vector<ItemIndex> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<ItemIndex>(i);
    Rng rng(mix_seed({seed_, static_cast<std::uint64_t>(user)}));
    rng.shuffle(perm);
    std::vector<double> scores(n, 0.0);
    for (std::size_t rank = 0; rank < n; ++rank) {
      scores[static_cast<std::size_t>(perm[rank])] = static_cast<double>(n - rank) / static_cast<double>(n);
    }
    return scores;
  }

 private:
  std::uint64_t seed_;
};

class PopularityModel final : public FittedModel {
 public:
  PopularityModel(int fit_round, std::vector<double> popularity)
      : FittedModel(RecommenderKind::kPopularity, fit_round, std::move(popularity)) {}

  bool knows_user(UserId) const override { return true; }

  std::vector<double> score_items(UserId) const override { return popularity_; }
};

// Item-based collaborative filtering with cosine similarity over binary
// interaction vectors and truncated neighbor lists.
class ItemKnnModel final : public FittedModel {
 public:
  ItemKnnModel(int fit_round, std::vector<double> popularity, const InteractionLog& log, int neighbor_count)
      : FittedModel(RecommenderKind::kItemKnn, fit_round, std::move(popularity)) {
    std::size_t n = num_items();
    std::vector<std::unordered_map<ItemIndex, int>> co(n);
    std::vector<int> degree(n, 0);
    for (const auto& [user, entry_ids] : log.by_user()) {
      std::vector<ItemIndex> items;
      items.reserve(entry_ids.size());
      for (std::size_t idx : entry_ids) items.push_back(log.entries()[idx].item);
      std::sort(items.begin(), items.end());
      user_items_.emplace(user, items);
      for (ItemIndex i : items) ++degree[static_cast<std::size_t>(i)];
      for (std::size_t a = 0; a < items.size(); ++a) {
        for (std::size_t b = a + 1; b < items.size(); ++b) {
          ++co[static_cast<std::size_t>(items[a])][items[b]];
        }
      }
    }
    neighbors_.resize(n);
    std::vector<std::vector<std::pair<ItemIndex, double>>> sims(n);
    for (std::size_t a = 0; a < n; ++a) {
      for (const auto& [b, count] : co[a]) {
        double denom = std::sqrt(static_cast<double>(degree[a]) * static_cast<double>(degree[static_cast<std::size_t>(b)]));
        if (denom <= 0) continue;
        double sim = static_cast<double>(count) / denom;
        sims[a].emplace_back(b, sim);
        sims[static_cast<std::size_t>(b)].emplace_back(static_cast<ItemIndex>(a), sim);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto& list = sims[i];
      std::sort(list.begin(), list.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
      });
      if (list.size() > static_cast<std::size_t>(neighbor_count)) list.resize(static_cast<std::size_t>(neighbor_count));
      neighbors_[i] = std::move(list);
    }
  }

  bool knows_user(UserId user) const override { return user_items_.count(user) != 0; }

  std::vector<double> score_items(UserId user) const override {
    std::vector<double> scores(num_items(), 0.0);
    auto it = user_items_.find(user);
    if (it == user_items_.end()) return scores;
    for (ItemIndex owned : it->second) {
      for (const auto& [neighbor, sim] : neighbors_[static_cast<std::size_t>(owned)]) {
        scores[static_cast<std::size_t>(neighbor)] += sim;
      }
    }
    return scores;
  }

  const std::vector<std::vector<std::pair<ItemIndex, double>>>& neighbor_lists() const { return neighbors_; }

 private:
  std::map<UserId, std::vector<ItemIndex>> user_items_;
  std::vector<std::vector<std::pair<ItemIndex, double>>> neighbors_;
};

// Matrix factorization trained with BPR: for each observed (user, item) one
// uniformly sampled unseen item forms a triple, optimized by plain SGD.
class BprMfModel final : public FittedModel {
 public:
  BprMfModel(int fit_round, std::vector<double> popularity, const InteractionLog& log, const RecommenderSpec& spec)
      : FittedModel(RecommenderKind::kBprMf, fit_round, std::move(popularity)), dim_(spec.latent_dim) {
    if (dim_ <= 0) throw ValidationError("latent_dim must be positive");
    std::size_t n_items = num_items();
    for (const auto& [user, entry_ids] : log.by_user()) {
      int uidx = static_cast<int>(user_index_.size());
      user_index_.emplace(user, uidx);
      (void)entry_ids;
    }
    p_.assign(user_index_.size() * static_cast<std::size_t>(dim_), 0.0);
    q_.assign(n_items * static_cast<std::size_t>(dim_), 0.0);
    Rng init_rng(mix_seed({spec.seed, 0xA11CEULL}));
    for (double& v : p_) v = init_rng.normal(0.0, 0.01);
    for (double& v : q_) v = init_rng.normal(0.0, 0.01);

    std::vector<std::pair<int, ItemIndex>> positives;
    std::vector<std::vector<ItemIndex>> pos_by_user(user_index_.size());
    for (const auto& [user, entry_ids] : log.by_user()) {
      int uidx = user_index_.at(user);
      for (std::size_t idx : entry_ids) {
        ItemIndex item = log.entries()[idx].item;
        positives.emplace_back(uidx, item);
        pos_by_user[static_cast<std::size_t>(uidx)].push_back(item);
      }
    }
    for (auto& items : pos_by_user) std::sort(items.begin(), items.end());

    std::vector<double> gp(static_cast<std::size_t>(dim_)), gi(static_cast<std::size_t>(dim_)),
        gj(static_cast<std::size_t>(dim_));
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      Rng rng(mix_seed({spec.seed, 0xE9ULL, static_cast<std::uint64_t>(epoch)}));
      rng.shuffle(positives);
      double loss_sum = 0.0;
      std::size_t triples = 0;
      for (const auto& [uidx, item] : positives) {
        const auto& owned = pos_by_user[static_cast<std::size_t>(uidx)];
        if (owned.size() >= n_items) continue;  // nothing left to contrast against
        ItemIndex neg;
        do {
          neg = static_cast<ItemIndex>(rng.index(n_items));
        } while (std::binary_search(owned.begin(), owned.end(), neg));
        double* p = p_.data() + static_cast<std::size_t>(uidx) * static_cast<std::size_t>(dim_);
        double* qi = q_.data() + static_cast<std::size_t>(item) * static_cast<std::size_t>(dim_);
        double* qj = q_.data() + static_cast<std::size_t>(neg) * static_cast<std::size_t>(dim_);
        loss_sum += bpr_triple_loss(p, qi, qj, dim_, spec.regularization);
        ++triples;
        bpr_triple_gradient(p, qi, qj, dim_, spec.regularization, gp.data(), gi.data(), gj.data());
        for (int f = 0; f < dim_; ++f) {
          p[f] -= spec.learning_rate * gp[f];
          qi[f] -= spec.learning_rate * gi[f];
          qj[f] -= spec.learning_rate * gj[f];
        }
      }
      epoch_losses_.push_back(triples > 0 ? loss_sum / static_cast<double>(triples) : 0.0);
    }
  }

  bool knows_user(UserId user) const override { return user_index_.count(user) != 0; }

  std::vector<double> score_items(UserId user) const override {
    std::vector<double> scores(num_items(), 0.0);
    auto it = user_index_.find(user);
    if (it == user_index_.end()) return scores;
    const double* p = p_.data() + static_cast<std::size_t>(it->second) * static_cast<std::size_t>(dim_);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double* q = q_.data() + i * static_cast<std::size_t>(dim_);
      double dot = 0;
      for (int f = 0; f < dim_; ++f) dot += p[f] * q[f];
      scores[i] = dot;
    }
    return scores;
  }

  // Mean sampled-triple loss per epoch, recorded before each update.
  const std::vector<double>& epoch_losses() const { return epoch_losses_; }

 private:
  int dim_;
  std::map<UserId, int> user_index_;
  std::vector<double> p_, q_;
  std::vector<double> epoch_losses_;
};

// Training-free propagation over the symmetric-normalized bipartite graph.
// Item one-hots are propagated L steps; a user's score for item i sums the
// layer-averaged meeting mass of the two walks, i.e. a degree-normalized
// multi-hop co-visitation count.
class GraphPropModel final : public FittedModel {
 public:
  GraphPropModel(int fit_round, std::vector<double> popularity, const InteractionLog& log, int layers)
      : FittedModel(RecommenderKind::kGraphProp, fit_round, std::move(popularity)), layers_(layers) {
    if (layers_ < 0) throw ValidationError("propagation_layers must be >= 0");
    std::size_t n_items = num_items();
    for (const auto& [user, entry_ids] : log.by_user()) {
      user_index_.emplace(user, static_cast<int>(user_index_.size()));
      (void)entry_ids;
    }
    user_edges_.resize(user_index_.size());
    item_edges_.resize(n_items);
    std::vector<int> user_deg(user_index_.size(), 0);
    std::vector<int> item_deg(n_items, 0);
    for (const LogEntry& e : log.entries()) {
      int u = user_index_.at(e.user);
      ++user_deg[static_cast<std::size_t>(u)];
      ++item_deg[static_cast<std::size_t>(e.item)];
    }
    for (const auto& [user, entry_ids] : log.by_user()) {
      int u = user_index_.at(user);
      for (std::size_t idx : entry_ids) {
        ItemIndex i = log.entries()[idx].item;
        double w = 1.0 / std::sqrt(static_cast<double>(user_deg[static_cast<std::size_t>(u)]) *
                                   static_cast<double>(item_deg[static_cast<std::size_t>(i)]));
        user_edges_[static_cast<std::size_t>(u)].emplace_back(i, w);
        item_edges_[static_cast<std::size_t>(i)].emplace_back(u, w);
      }
    }
    for (auto& edges : user_edges_) std::sort(edges.begin(), edges.end());
    for (auto& edges : item_edges_) std::sort(edges.begin(), edges.end());
  }

  bool knows_user(UserId user) const override { return user_index_.count(user) != 0; }

  std::vector<double> score_items(UserId user) const override {
    std::size_t n_items = num_items();
    std::vector<double> scores(n_items, 0.0);
    auto it = user_index_.find(user);
    if (it == user_index_.end()) return scores;

    std::size_t n_users = user_index_.size();
    // First sweep: accumulate sum over layers 0..L of A_hat^l applied to the
    // user's one-hot vector.
    std::vector<double> uvec(n_users, 0.0), ivec(n_items, 0.0);
    std::vector<double> acc_u(n_users, 0.0), acc_i(n_items, 0.0);
    uvec[static_cast<std::size_t>(it->second)] = 1.0;
    acc_u = uvec;
    for (int l = 0; l < layers_; ++l) {
      propagate(uvec, ivec);
      for (std::size_t k = 0; k < n_users; ++k) acc_u[k] += uvec[k];
      for (std::size_t k = 0; k < n_items; ++k) acc_i[k] += ivec[k];
    }
    // Project onto the item block and sweep again; the item component of the
    // result is the layer-averaged inner product with every item's walk.
    std::vector<double> u2(n_users, 0.0);
    std::vector<double> i2 = acc_i;
    std::vector<double> out_i = i2;
    for (int l = 0; l < layers_; ++l) {
      propagate(u2, i2);
      for (std::size_t k = 0; k < n_items; ++k) out_i[k] += i2[k];
    }
    double denom = static_cast<double>(layers_ + 1);
    for (std::size_t k = 0; k < n_items; ++k) scores[k] = out_i[k] / (denom * denom);
    return scores;
  }

 private:
  // One application of the symmetric-normalized bipartite adjacency: the new
  // user block comes from the old item block and vice versa.
  void propagate(std::vector<double>& uvec, std::vector<double>& ivec) const {
    std::vector<double> nu(uvec.size(), 0.0), ni(ivec.size(), 0.0);
    for (std::size_t u = 0; u < user_edges_.size(); ++u) {
      double mass = uvec[u];
      if (mass != 0.0) {
        for (const auto& [i, w] : user_edges_[u]) ni[static_cast<std::size_t>(i)] += mass * w;
      }
    }
    for (std::size_t i = 0; i < item_edges_.size(); ++i) {
      double mass = ivec[i];
      if (mass != 0.0) {
        for (const auto& [u, w] : item_edges_[i]) nu[static_cast<std::size_t>(u)] += mass * w;
      }
    }
    uvec = std::move(nu);
    ivec = std::move(ni);
  }

  int layers_;
  std::map<UserId, int> user_index_;
  std::vector<std::vector<std::pair<ItemIndex, double>>> user_edges_;
  std::vector<std::vector<std::pair<int, double>>> item_edges_;
};

// ---------------------------------------------------------------------------
// fit / randomize
// ---------------------------------------------------------------------------

inline std::unique_ptr<FittedModel> fit(const RecommenderSpec& spec, const InteractionLog& log,
                                        const Catalog& catalog) {
  if (catalog.num_items() == 0) throw ValidationError("cannot fit on an empty catalog");
  if (log.empty()) throw ValidationError("cannot fit on an empty interaction log");
  int fit_round = log.last_round() + 1;
  std::vector<double> pop = detail::popularity_counts(log, catalog.num_items());
  switch (spec.kind) {
    case RecommenderKind::kRandom:
      return std::make_unique<RandomModel>(fit_round, std::move(pop), spec.seed);
    case RecommenderKind::kPopularity:
      return std::make_unique<PopularityModel>(fit_round, std::move(pop));
    case RecommenderKind::kItemKnn:
      if (spec.neighbors <= 0) throw ValidationError("neighbors must be positive");
      return std::make_unique<ItemKnnModel>(fit_round, std::move(pop), log, spec.neighbors);
    case RecommenderKind::kBprMf:
      return std::make_unique<BprMfModel>(fit_round, std::move(pop), log, spec);
    case RecommenderKind::kGraphProp:
      return std::make_unique<GraphPropModel>(fit_round, std::move(pop), log, spec.propagation_layers);
  }
  throw ValidationError("unknown recommender kind");
}

// Replaces floor(fraction * |page|) uniformly chosen page positions with
// uniform draws from the catalog minus (exclusions + current page). Scores
// are left untouched; they describe the pre-replacement ranking. When the
// candidate pool runs short the lowest selected positions keep originals and
// the shortfall is recorded on the page.
inline RankedPage randomize_page(const RankedPage& page, double fraction, const Catalog& catalog,
                                 const ItemMask& exclude, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw ValidationError("randomize fraction must be in [0, 1]");
  RankedPage out = page;
  std::size_t n = page.items.size();
  std::size_t m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (m == 0) return out;

  Rng rng(seed);
  std::vector<std::size_t> all_positions(n);
  for (std::size_t i = 0; i < n; ++i) all_positions[i] = i;
  std::vector<std::size_t> positions = rng.sample(std::move(all_positions), m);
  std::sort(positions.begin(), positions.end());

  std::vector<char> on_page(catalog.num_items(), 0);
  for (ItemIndex i : page.items) on_page[static_cast<std::size_t>(i)] = 1;
  std::vector<ItemIndex> candidates;
  for (std::size_t i = 0; i < catalog.num_items(); ++i) {
    bool excluded = i < exclude.size() && exclude[i];
    if (!excluded && !on_page[i]) candidates.push_back(static_cast<ItemIndex>(i));
  }
  std::vector<ItemIndex> replacements = rng.sample(std::move(candidates), m);
  for (std::size_t r = 0; r < replacements.size(); ++r) out.items[positions[r]] = replacements[r];
  out.replacement_shortfall += static_cast<int>(m - replacements.size());
  return out;
}

}  // namespace bubblesim
