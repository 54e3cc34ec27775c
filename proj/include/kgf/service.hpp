#pragma once

// HTTP serving over immutable snapshots. A snapshot bundles the store,
// model(s), kNN index and alias table; request handlers pin the current
// snapshot with a shared_ptr, so a reload builds the replacement fully and
// swaps it atomically without dropping or mixing in-flight requests.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "kgf/annotator.hpp"
#include "kgf/graph_store.hpp"
#include "kgf/knn.hpp"
#include "kgf/model.hpp"

namespace httplib {
class Server;
}

namespace kgf {

struct ServiceConfig {
    std::string store_path;
    std::string model_path;
    std::string related_model_path;  // optional
    std::string index_path;          // optional; exact index built when empty
    RerankWeights weights;
    std::uint32_t max_candidates = 8;
    int port = 8080;
    std::uint32_t workers = 4;
    std::string snapshot_id;
    double default_tau = 0.0;

    // Missing required fields throw InvalidArgument naming the field.
    static ServiceConfig from_json(const nlohmann::json& j);
    // KGF_PORT / KGF_WORKERS environment overrides.
    void apply_env_overrides();
};

struct Snapshot {
    std::string id;
    GraphStore store;
    EmbeddingModel model;
    std::optional<EmbeddingModel> related_model;
    KnnIndex index;  // over related_model when present, else model
    AliasTable alias_table;
    AnnotatorConfig annotator;
    double default_tau = 0.0;

    const EmbeddingModel& index_model() const {
        return related_model ? *related_model : model;
    }

    // Loads all artifacts and verifies they fit together (format versions
    // and shapes). Throws on any mismatch.
    static std::shared_ptr<const Snapshot> load(const ServiceConfig& cfg);
};

class KnowledgeService {
public:
    explicit KnowledgeService(ServiceConfig cfg);
    ~KnowledgeService();

    // Blocking serve loop (CLI path).
    bool run();
    // Background listener for tests; returns the bound port.
    int start_background();
    void stop();

    std::shared_ptr<const Snapshot> snapshot() const;
    // Builds the new snapshot, then swaps; in-flight requests keep the old
    // one until they finish. Returns the new snapshot id.
    std::string reload(const ServiceConfig& cfg);

private:
    void install_routes();

    ServiceConfig cfg_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
    std::unique_ptr<httplib::Server> server_;
    std::thread listener_;
};

}  // namespace kgf
