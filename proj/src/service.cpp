#include "kgf/service.hpp"

#include <cstdlib>
#include <iostream>

#include <httplib.h>

#include "kgf/embed_io.hpp"
#include "kgf/json_io.hpp"
#include "kgf/rng.hpp"
#include "kgf/services.hpp"
#include "kgf/text.hpp"

namespace kgf {

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j) {
    ServiceConfig cfg;
    auto need = [&](const char* field) -> std::string {
        if (!j.contains(field) || !j.at(field).is_string())
            throw InvalidArgument(std::string("service config is missing required field '") +
                                  field + "'");
        return j.at(field).get<std::string>();
    };
    cfg.store_path = need("store");
    cfg.model_path = need("model");
    cfg.snapshot_id = need("snapshot_id");
    if (j.contains("related_model"))
        cfg.related_model_path = j.at("related_model").get<std::string>();
    if (j.contains("index")) cfg.index_path = j.at("index").get<std::string>();
    if (j.contains("weights")) cfg.weights = rerank_weights_from_json(j.at("weights"));
    if (j.contains("max_candidates"))
        cfg.max_candidates = j.at("max_candidates").get<std::uint32_t>();
    if (j.contains("port")) cfg.port = j.at("port").get<int>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<std::uint32_t>();
    if (j.contains("tau")) cfg.default_tau = j.at("tau").get<double>();
    return cfg;
}

void ServiceConfig::apply_env_overrides() {
    if (const char* p = std::getenv("KGF_PORT")) port = std::atoi(p);
    if (const char* w = std::getenv("KGF_WORKERS"))
        workers = static_cast<std::uint32_t>(std::atoi(w));
}

std::shared_ptr<const Snapshot> Snapshot::load(const ServiceConfig& cfg) {
    auto snap = std::make_shared<Snapshot>();
    snap->id = cfg.snapshot_id;
    snap->store = GraphStore::load(cfg.store_path);
    snap->model = load_model(cfg.model_path);
    if (snap->model.entity_count() != snap->store.entity_count())
        throw InvalidArgument(
            "model entity count does not match the store (" +
            std::to_string(snap->model.entity_count()) + " vs " +
            std::to_string(snap->store.entity_count()) + ")");
    if (!cfg.related_model_path.empty()) {
        snap->related_model = load_model(cfg.related_model_path);
        if (snap->related_model->entity_count() != snap->store.entity_count())
            throw InvalidArgument("related model entity count does not match the store");
    }
    const EmbeddingModel& index_model = snap->index_model();
    if (!cfg.index_path.empty()) {
        snap->index = KnnIndex::load(cfg.index_path, index_model);
    } else {
        snap->index = KnnIndex::build(index_model, Metric::Cosine,
                                      IndexMode::Exact, {},
                                      snap->store.entity_types());
    }
    snap->alias_table = AliasTable::build(snap->store);
    snap->annotator.weights = cfg.weights;
    snap->annotator.max_candidates = cfg.max_candidates;
    snap->default_tau = cfg.default_tau;
    return snap;
}

namespace {

void reply_json(httplib::Response& res, int status, const OrderedJson& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message,
                 const std::string& field = {}) {
    OrderedJson j;
    j["error"] = message;
    if (!field.empty()) j["field"] = field;
    reply_json(res, status, j);
}

// Maps exceptions from the handler body onto the HTTP error contract:
// malformed input 400, unknown entity 404, anything else an opaque 500.
template <typename Fn>
void guarded(const httplib::Request&, httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const nlohmann::json::exception& ex) {
        reply_error(res, 400, std::string("malformed request body: ") + ex.what());
    } catch (const NotFoundError& ex) {
        reply_error(res, 404, ex.what());
    } catch (const InvalidArgument& ex) {
        reply_error(res, 400, ex.what());
    } catch (const std::exception& ex) {
        std::uint64_t id = mix64(reinterpret_cast<std::uintptr_t>(&ex) ^
                                 static_cast<std::uint64_t>(
                                     std::chrono::steady_clock::now()
                                         .time_since_epoch()
                                         .count()));
        std::cerr << "service error " << to_hex64(id) << ": " << ex.what()
                  << "\n";
        reply_error(res, 500, "internal error " + to_hex64(id));
    }
}

nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    nlohmann::json j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw InvalidArgument("request body is not valid JSON");
    return j;
}

}  // namespace

KnowledgeService::KnowledgeService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    snapshot_ = Snapshot::load(cfg_);
    server_ = std::make_unique<httplib::Server>();
    std::uint32_t workers = std::max<std::uint32_t>(1, cfg_.workers);
    server_->new_task_queue = [workers] {
        return new httplib::ThreadPool(workers);
    };
    install_routes();
}

KnowledgeService::~KnowledgeService() { stop(); }

std::shared_ptr<const Snapshot> KnowledgeService::snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return snapshot_;
}

std::string KnowledgeService::reload(const ServiceConfig& cfg) {
    auto next = Snapshot::load(cfg);  // built fully before the swap
    {
        std::lock_guard<std::mutex> lock(mutex_);
        snapshot_ = next;
        cfg_.store_path = cfg.store_path;
        cfg_.model_path = cfg.model_path;
        cfg_.related_model_path = cfg.related_model_path;
        cfg_.index_path = cfg.index_path;
        cfg_.weights = cfg.weights;
        cfg_.max_candidates = cfg.max_candidates;
        cfg_.snapshot_id = cfg.snapshot_id;
        cfg_.default_tau = cfg.default_tau;
    }
    return next->id;
}

void KnowledgeService::install_routes() {
    server_->Get("/healthz", [this](const httplib::Request& req,
                                    httplib::Response& res) {
        guarded(req, res, [&] {
            auto snap = snapshot();
            OrderedJson j;
            j["snapshot"] = snap->id;
            j["entities"] = snap->store.entity_count();
            reply_json(res, 200, j);
        });
    });

    server_->Post("/annotate", [this](const httplib::Request& req,
                                      httplib::Response& res) {
        guarded(req, res, [&] {
            auto snap = snapshot();
            nlohmann::json body = parse_body(req);
            if (!body.contains("text") || !body["text"].is_string())
                throw InvalidArgument("request is missing string field 'text'");
            Document doc{body.value("doc_id", std::string("text")),
                         body["text"].get<std::string>()};
            Annotation ann = annotate_document(doc, snap->alias_table,
                                               snap->model, snap->store,
                                               snap->annotator);
            reply_json(res, 200, annotation_json(ann, snap->store));
        });
    });

    server_->Get(R"(/related/([^/?]+))", [this](const httplib::Request& req,
                                                httplib::Response& res) {
        guarded(req, res, [&] {
            auto snap = snapshot();
            EntityId entity = resolve_or_throw(snap->store, req.matches[1].str());
            std::uint32_t k = 10, nprobe = 10;
            if (req.has_param("k")) k = static_cast<std::uint32_t>(
                std::stoul(req.get_param_value("k")));
            if (req.has_param("nprobe")) nprobe = static_cast<std::uint32_t>(
                std::stoul(req.get_param_value("nprobe")));
            std::optional<TypeId> type_filter;
            if (req.has_param("type")) {
                auto t = snap->store.find_type(req.get_param_value("type"));
                if (!t) throw NotFoundError("unknown type '" +
                                            req.get_param_value("type") + "'");
                type_filter = *t;
            }
            auto neighbors = related_entities(snap->index, entity, k,
                                              type_filter, nprobe);
            reply_json(res, 200, neighbors_json(neighbors, snap->store));
        });
    });

    server_->Post("/verify", [this](const httplib::Request& req,
                                    httplib::Response& res) {
        guarded(req, res, [&] {
            auto snap = snapshot();
            nlohmann::json body = parse_body(req);
            if (!body.contains("triples") || !body["triples"].is_array())
                throw InvalidArgument("request is missing array field 'triples'");
            double tau = body.value("tau", snap->default_tau);
            std::vector<Triple> triples;
            for (const auto& tj : body["triples"]) {
                Triple t;
                t.head = resolve_or_throw(snap->store,
                                          tj.at("head").get<std::string>());
                t.predicate = resolve_predicate_or_throw(
                    snap->store, tj.at("predicate").get<std::string>());
                t.tail = ObjectRef::entity(resolve_or_throw(
                    snap->store, tj.at("tail").get<std::string>()));
                triples.push_back(t);
            }
            auto verdicts = verify_batch(snap->model, triples, tau);
            reply_json(res, 200, verdicts_json(verdicts, snap->store));
        });
    });

    server_->Post("/rank", [this](const httplib::Request& req,
                                  httplib::Response& res) {
        guarded(req, res, [&] {
            auto snap = snapshot();
            nlohmann::json body = parse_body(req);
            if (!body.contains("subject"))
                throw InvalidArgument("request is missing field 'subject'");
            if (!body.contains("predicate"))
                throw InvalidArgument("request is missing field 'predicate'");
            EntityId subject =
                resolve_or_throw(snap->store, body["subject"].get<std::string>());
            PredicateId predicate = resolve_predicate_or_throw(
                snap->store, body["predicate"].get<std::string>());
            std::optional<std::vector<EntityId>> candidates;
            if (body.contains("candidates")) {
                candidates.emplace();
                for (const auto& c : body["candidates"])
                    candidates->push_back(
                        resolve_or_throw(snap->store, c.get<std::string>()));
            }
            double popularity_weight = body.value("popularity_weight", 0.0);
            RankedFacts rf = rank_facts(snap->model, snap->store, subject,
                                        predicate, candidates, popularity_weight);
            reply_json(res, 200, ranked_facts_json(rf, snap->store));
        });
    });

    server_->Post("/admin/reload", [this](const httplib::Request& req,
                                          httplib::Response& res) {
        guarded(req, res, [&] {
            nlohmann::json body = parse_body(req);
            ServiceConfig next =
                body.empty() ? cfg_ : ServiceConfig::from_json(body);
            std::string id = reload(next);
            auto snap = snapshot();
            OrderedJson j;
            j["snapshot"] = id;
            j["entities"] = snap->store.entity_count();
            reply_json(res, 200, j);
        });
    });
}

bool KnowledgeService::run() {
    std::cerr << "kgf service on port " << cfg_.port << " (snapshot "
              << cfg_.snapshot_id << ")\n";
    return server_->listen("0.0.0.0", cfg_.port);
}

int KnowledgeService::start_background() {
    if (cfg_.port == 0) {
        cfg_.port = server_->bind_to_any_port("127.0.0.1");
        if (cfg_.port <= 0) throw IoError("cannot bind an ephemeral port");
    } else if (!server_->bind_to_port("127.0.0.1", cfg_.port)) {
        throw IoError("cannot bind port " + std::to_string(cfg_.port));
    }
    listener_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return cfg_.port;
}

void KnowledgeService::stop() {
    if (server_) server_->stop();
    if (listener_.joinable()) listener_.join();
}

}  // namespace kgf
