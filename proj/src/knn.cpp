#include "kgf/knn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "kgf/binary_io.hpp"
#include "kgf/rng.hpp"

namespace kgf {

Metric metric_from_name(const std::string& name) {
    if (name == "cosine") return Metric::Cosine;
    if (name == "euclidean") return Metric::Euclidean;
    throw InvalidArgument("unknown metric '" + name +
                          "' (expected cosine or euclidean)");
}

const char* metric_name(Metric m) {
    return m == Metric::Cosine ? "cosine" : "euclidean";
}

namespace {

double l2_sq(const float* a, const float* b, std::uint32_t d) {
    double s = 0;
    for (std::uint32_t i = 0; i < d; ++i) {
        double v = static_cast<double>(a[i]) - b[i];
        s += v * v;
    }
    return s;
}

double dot(const float* a, const float* b, std::uint32_t d) {
    double s = 0;
    for (std::uint32_t i = 0; i < d; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

double norm(const float* a, std::uint32_t d) {
    return std::sqrt(dot(a, a, d));
}

// Seeded k-means++ over `data` (n x d). 25 iterations by default; empty
// clusters are re-seeded from the point farthest from its centroid.
std::vector<float> kmeans(const std::vector<float>& data, std::uint64_t n,
                          std::uint32_t d, std::uint32_t k,
                          std::uint32_t iterations, std::uint64_t seed,
                          std::vector<std::uint32_t>& assignment) {
    Rng rng(stream_seed({seed, 0x4b4dull}));
    std::vector<float> centroids(static_cast<std::size_t>(k) * d);

    // k-means++ seeding
    std::uint64_t first = rng.bounded(n);
    std::copy_n(data.data() + first * d, d, centroids.data());
    std::vector<double> dist_sq(n);
    for (std::uint64_t i = 0; i < n; ++i)
        dist_sq[i] = l2_sq(data.data() + i * d, centroids.data(), d);
    for (std::uint32_t c = 1; c < k; ++c) {
        double total = 0;
        for (double v : dist_sq) total += v;
        std::uint64_t pick = 0;
        if (total > 0) {
            double target = rng.uniform() * total;
            double acc = 0;
            for (std::uint64_t i = 0; i < n; ++i) {
                acc += dist_sq[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.bounded(n);
        }
        float* cent = centroids.data() + static_cast<std::size_t>(c) * d;
        std::copy_n(data.data() + pick * d, d, cent);
        for (std::uint64_t i = 0; i < n; ++i)
            dist_sq[i] = std::min(dist_sq[i], l2_sq(data.data() + i * d, cent, d));
    }

    assignment.assign(n, 0);
    std::vector<double> sums(static_cast<std::size_t>(k) * d);
    std::vector<std::uint64_t> sizes(k);
    std::vector<double> point_dist(n);

    for (std::uint32_t iter = 0; iter < iterations; ++iter) {
        for (std::uint64_t i = 0; i < n; ++i) {
            const float* p = data.data() + i * d;
            double best = std::numeric_limits<double>::max();
            std::uint32_t best_c = 0;
            for (std::uint32_t c = 0; c < k; ++c) {
                double dsq = l2_sq(p, centroids.data() + static_cast<std::size_t>(c) * d, d);
                if (dsq < best) {
                    best = dsq;
                    best_c = c;
                }
            }
            assignment[i] = best_c;
            point_dist[i] = best;
        }
        for (std::uint32_t c = 0; c < k; ++c) sizes[c] = 0;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::uint64_t i = 0; i < n; ++i) {
            std::uint32_t c = assignment[i];
            sizes[c]++;
            const float* p = data.data() + i * d;
            double* s = sums.data() + static_cast<std::size_t>(c) * d;
            for (std::uint32_t j = 0; j < d; ++j) s[j] += p[j];
        }
        for (std::uint32_t c = 0; c < k; ++c) {
            float* cent = centroids.data() + static_cast<std::size_t>(c) * d;
            if (sizes[c] > 0) {
                const double* s = sums.data() + static_cast<std::size_t>(c) * d;
                for (std::uint32_t j = 0; j < d; ++j)
                    cent[j] = static_cast<float>(s[j] / static_cast<double>(sizes[c]));
            } else {
                // farthest point becomes the new centroid
                std::uint64_t far = 0;
                double far_d = -1;
                for (std::uint64_t i = 0; i < n; ++i) {
                    if (point_dist[i] > far_d) {
                        far_d = point_dist[i];
                        far = i;
                    }
                }
                std::copy_n(data.data() + far * d, d, cent);
                assignment[far] = c;
                point_dist[far] = 0;
            }
        }
    }

    // final assignment against the last centroid update
    for (std::uint64_t i = 0; i < n; ++i) {
        const float* p = data.data() + i * d;
        double best = std::numeric_limits<double>::max();
        std::uint32_t best_c = 0;
        for (std::uint32_t c = 0; c < k; ++c) {
            double dsq = l2_sq(p, centroids.data() + static_cast<std::size_t>(c) * d, d);
            if (dsq < best) {
                best = dsq;
                best_c = c;
            }
        }
        assignment[i] = best_c;
    }
    return centroids;
}

}  // namespace

void KnnIndex::attach_vectors(const EmbeddingModel& model) {
    dim_ = model.dim();
    count_ = model.entity_count();
    vectors_ = model.entity_matrix();
    if (metric_ == Metric::Cosine) {
        working_ = vectors_;
        for (std::uint64_t i = 0; i < count_; ++i) {
            float* v = working_.data() + i * dim_;
            double nv = norm(v, dim_);
            if (nv > 0)
                for (std::uint32_t j = 0; j < dim_; ++j)
                    v[j] = static_cast<float>(v[j] / nv);
        }
    } else {
        working_ = vectors_;
    }
}

KnnIndex KnnIndex::build(const EmbeddingModel& model, Metric metric,
                         IndexMode mode, const IvfParams& params,
                         std::vector<TypeId> types) {
    KnnIndex index;
    index.metric_ = metric;
    index.mode_ = mode;
    index.attach_vectors(model);
    if (!types.empty() && types.size() != model.entity_count())
        throw InvalidArgument("type table size does not match entity count");
    index.types_ = std::move(types);

    if (mode == IndexMode::Ivf) {
        if (params.n_clusters < 1)
            throw InvalidArgument("ivf needs n_clusters >= 1");
        if (params.n_clusters > index.count_)
            throw InvalidArgument("n_clusters exceeds entity count");
        std::vector<std::uint32_t> assignment;
        index.centroids_ =
            kmeans(index.working_, index.count_, index.dim_, params.n_clusters,
                   params.iterations, params.seed, assignment);
        index.postings_.assign(params.n_clusters, {});
        for (std::uint64_t i = 0; i < index.count_; ++i)
            index.postings_[assignment[i]].push_back(static_cast<std::uint32_t>(i));
    }
    return index;
}

double KnnIndex::similarity(std::span<const float> q, std::uint32_t id) const {
    const float* v = vectors_.data() + static_cast<std::size_t>(id) * dim_;
    if (metric_ == Metric::Cosine) {
        double nq = norm(q.data(), dim_);
        double nv = norm(v, dim_);
        if (nq == 0 || nv == 0) return 0.0;
        return dot(q.data(), v, dim_) / (nq * nv);
    }
    return -std::sqrt(l2_sq(q.data(), v, dim_));
}

std::vector<std::uint32_t> KnnIndex::nearest_centroids(
    std::span<const float> q, std::uint32_t nprobe) const {
    std::uint32_t k = static_cast<std::uint32_t>(postings_.size());
    nprobe = std::min(nprobe, k);
    std::vector<std::pair<double, std::uint32_t>> dists(k);
    for (std::uint32_t c = 0; c < k; ++c)
        dists[c] = {l2_sq(q.data(), centroids_.data() + static_cast<std::size_t>(c) * dim_, dim_), c};
    std::partial_sort(dists.begin(), dists.begin() + nprobe, dists.end());
    std::vector<std::uint32_t> out(nprobe);
    for (std::uint32_t i = 0; i < nprobe; ++i) out[i] = dists[i].second;
    return out;
}

std::vector<Neighbor> KnnIndex::query(EntityId entity, std::uint32_t k,
                                      std::uint32_t nprobe,
                                      std::optional<TypeId> type_filter) const {
    if (entity >= count_)
        throw NotFoundError("unknown entity id: " + std::to_string(entity));
    std::span<const float> v{vectors_.data() + entity * dim_, dim_};
    return query(v, k, nprobe, type_filter, entity);
}

std::vector<Neighbor> KnnIndex::query(std::span<const float> vector,
                                      std::uint32_t k, std::uint32_t nprobe,
                                      std::optional<TypeId> type_filter,
                                      std::optional<EntityId> exclude) const {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (vector.size() != dim_)
        throw InvalidArgument("query vector has wrong dimension " +
                              std::to_string(vector.size()) + ", expected " +
                              std::to_string(dim_));
    if (type_filter && types_.empty())
        throw InvalidArgument("index was built without a type table");

    auto admit = [&](std::uint32_t id) {
        if (exclude && *exclude == id) return false;
        if (type_filter && types_[id] != *type_filter) return false;
        return true;
    };

    std::vector<std::pair<double, std::uint32_t>> candidates;
    if (mode_ == IndexMode::Exact) {
        candidates.reserve(count_);
        for (std::uint32_t id = 0; id < count_; ++id)
            if (admit(id)) candidates.emplace_back(similarity(vector, id), id);
    } else {
        // probe in working space (normalized for cosine)
        std::vector<float> wq(vector.begin(), vector.end());
        if (metric_ == Metric::Cosine) {
            double nq = norm(wq.data(), dim_);
            if (nq > 0)
                for (auto& x : wq) x = static_cast<float>(x / nq);
        }
        for (std::uint32_t c : nearest_centroids(wq, nprobe))
            for (std::uint32_t id : postings_[c])
                if (admit(id)) candidates.emplace_back(similarity(vector, id), id);
    }

    auto better = [](const std::pair<double, std::uint32_t>& a,
                     const std::pair<double, std::uint32_t>& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    std::size_t take = std::min<std::size_t>(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + take,
                      candidates.end(), better);

    std::vector<Neighbor> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        out.push_back({candidates[i].second, candidates[i].first,
                       static_cast<std::uint32_t>(i + 1)});
    return out;
}

void KnnIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write index file: " + path);
    BinaryWriter w(out);
    w.bytes("KGIX");
    w.u32(kIndexFormatVersion);
    w.u8(static_cast<std::uint8_t>(metric_));
    w.u8(static_cast<std::uint8_t>(mode_));
    w.u32(dim_);
    w.u64(count_);
    w.u8(types_.empty() ? 0 : 1);
    for (TypeId t : types_) w.u32(t);
    w.u32(static_cast<std::uint32_t>(postings_.size()));
    w.f32_array(centroids_);
    for (const auto& list : postings_) {
        w.u64(list.size());
        for (std::uint32_t id : list) w.u32(id);
    }
    if (!out) throw IoError("short write to index file: " + path);
}

KnnIndex KnnIndex::load(const std::string& path, const EmbeddingModel& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index file: " + path);
    BinaryReader r(in, path);
    r.expect_magic("KGIX");
    std::uint64_t at = r.offset();
    if (std::uint32_t v = r.u32(); v != kIndexFormatVersion)
        throw FormatError(path + ": unsupported index version " + std::to_string(v), at);

    KnnIndex index;
    index.metric_ = static_cast<Metric>(r.u8());
    index.mode_ = static_cast<IndexMode>(r.u8());
    at = r.offset();
    std::uint32_t dim = r.u32();
    std::uint64_t count = r.u64();
    if (dim != model.dim() || count != model.entity_count())
        throw FormatError(path + ": index shape (" + std::to_string(count) + "x" +
                              std::to_string(dim) + ") does not match model (" +
                              std::to_string(model.entity_count()) + "x" +
                              std::to_string(model.dim()) + ")",
                          at);
    bool has_types = r.u8() != 0;
    if (has_types) {
        index.types_.resize(count);
        for (auto& t : index.types_) t = r.u32();
    }
    std::uint32_t n_clusters = r.u32();
    r.f32_array(index.centroids_, static_cast<std::size_t>(n_clusters) * dim);
    index.postings_.resize(n_clusters);
    for (auto& list : index.postings_) {
        std::uint64_t len = r.u64();
        list.resize(len);
        for (auto& id : list) id = r.u32();
    }
    if (!r.at_eof())
        throw FormatError(path + ": trailing bytes", r.offset());
    index.attach_vectors(model);
    return index;
}

}  // namespace kgf
