#include "cnspk/service.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <stop_token>
#include <thread>

#include "cnspk/error.hpp"
#include "cnspk/workbench.hpp"

// After Eigen: glibc's resolv.h, pulled in here, defines a macro named _res.
#include <httplib.h>

namespace cnspk {

using nlohmann::json;

int default_port() {
    if (const char* env = std::getenv("CNSPK_PORT")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v < 65536) return static_cast<int>(v);
    }
    return 8080;
}

namespace {

enum class State { queued, running, done, failed, cancelled };

const char* state_name(State s) {
    switch (s) {
        case State::queued: return "queued";
        case State::running: return "running";
        case State::done: return "done";
        case State::failed: return "failed";
        case State::cancelled: return "cancelled";
    }
    return "unknown";
}

bool finished(State s) { return s == State::done || s == State::failed || s == State::cancelled; }

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

struct Job {
    std::string id;
    std::string dataset_id;
    JobRequest request;
    std::shared_ptr<const ObservedDataset> data;

    // Guarded by Impl::mutex.
    State state = State::queued;
    std::string submitted, started, finished_at;
    std::size_t iteration = 0;
    std::vector<double> loss_trace;
    std::vector<double> best_member;
    std::optional<JobResult> result;
    json error;
    bool cancel_requested = false;
    std::stop_source stop;
};

json error_body(const std::exception& e) {
    json body{{"error", e.what()}};
    if (const auto* d = dynamic_cast<const DataError*>(&e)) {
        body["row"] = d->row();
        body["column"] = d->column();
        if (!d->column_name().empty()) body["column_name"] = d->column_name();
    }
    if (const auto* b = dynamic_cast<const BoundViolation*>(&e)) body["multiplier"] = b->multiplier();
    if (const auto* f = dynamic_cast<const IntegrationFailure*>(&e)) {
        body["last_good_time"] = f->last_good_time();
    }
    return body;
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

struct Service::Impl {
    ServiceConfig cfg;
    httplib::Server http;

    std::mutex mutex;
    std::condition_variable_any queue_cv;
    std::deque<std::shared_ptr<Job>> queue;
    std::map<std::string, std::shared_ptr<Job>> jobs;
    std::deque<std::string> job_order;
    std::map<std::string, std::shared_ptr<const ObservedDataset>> datasets;
    std::deque<std::string> dataset_order;
    std::size_t next_job = 1;
    std::size_t next_dataset = 1;
    std::vector<std::jthread> workers;
    std::string sample_csv;

    explicit Impl(ServiceConfig c) : cfg(c) {
        sample_csv = export_dataset(make_sample_dataset());
        routes();
        const std::size_t n = std::max<std::size_t>(cfg.workers, 1);
        for (std::size_t i = 0; i < n; ++i) {
            workers.emplace_back([this](std::stop_token st) { work(st); });
        }
    }

    ~Impl() {
        {
            std::lock_guard lock(mutex);
            for (auto& [id, job] : jobs) job->stop.request_stop();
        }
        for (auto& w : workers) w.request_stop();
        queue_cv.notify_all();
        workers.clear();
    }

    json job_json(const Job& job) const {
        json progress{{"iteration", job.iteration}};
        const bool is_estimate = job.request.kind == JobKind::estimate;
        double fraction = job.state == State::done ? 1.0 : 0.0;
        if (is_estimate && !job.loss_trace.empty()) {
            progress["best_loss"] = job.loss_trace.back();
            progress["trace"] = job.loss_trace;
            json member = json::object();
            for (std::size_t d = 0; d < job.best_member.size(); ++d) {
                member[job.request.bounds.estimated[d].name] = job.best_member[d];
            }
            progress["best_member"] = std::move(member);
            if (job.state != State::done) {
                fraction = static_cast<double>(job.iteration) /
                           static_cast<double>(job.request.de.max_iter);
            }
        }
        progress["fraction"] = std::min(fraction, 1.0);
        json out{{"id", job.id},
                 {"kind", std::string(to_string(job.request.kind))},
                 {"dataset", job.dataset_id},
                 {"state", state_name(job.state)},
                 {"progress", std::move(progress)},
                 {"submitted", job.submitted},
                 {"started", job.started.empty() ? json(nullptr) : json(job.started)},
                 {"finished", job.finished_at.empty() ? json(nullptr) : json(job.finished_at)},
                 {"cancel_requested", job.cancel_requested}};
        if (!job.error.is_null()) out["error"] = job.error;
        if (job.result && job.result->report) {
            out["termination"] = std::string(to_string(job.result->report->termination));
        }
        return out;
    }

    // Forward-only transitions; anything else is a bug.
    static void advance(Job& job, State to) {
        const bool ok = (job.state == State::queued && (to == State::running || to == State::cancelled)) ||
                        (job.state == State::running && finished(to));
        if (!ok) throw std::logic_error("illegal job transition");
        job.state = to;
        if (to == State::running) job.started = timestamp();
        if (finished(to)) job.finished_at = timestamp();
    }

    void work(std::stop_token st) {
        while (true) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock lock(mutex);
                queue_cv.wait(lock, st, [&] { return !queue.empty(); });
                if (st.stop_requested()) return;
                job = queue.front();
                queue.pop_front();
                if (job->state != State::queued) continue;
                advance(*job, State::running);
            }
            run(*job);
        }
    }

    void run(Job& job) {
        const auto progress = [&](const EstimationProgress& p) {
            std::lock_guard lock(mutex);
            job.iteration = p.iteration;
            job.loss_trace.push_back(p.best_loss);
            job.best_member = *p.best_member;
        };
        State end = State::done;
        std::optional<JobResult> result;
        json error;
        try {
            result = run_job(job.request, *job.data, progress, job.stop.get_token());
            if (result->report && result->report->termination == TerminationReason::cancelled) {
                end = State::cancelled;
            }
        } catch (const Cancelled&) {
            end = State::cancelled;
        } catch (const std::exception& e) {
            end = State::failed;
            error = error_body(e);
        }
        std::lock_guard lock(mutex);
        job.result = std::move(result);
        job.error = std::move(error);
        advance(job, end);
    }

    void evict_jobs() {
        while (jobs.size() > cfg.max_jobs) {
            auto it = std::find_if(job_order.begin(), job_order.end(),
                                   [&](const std::string& id) { return finished(jobs.at(id)->state); });
            if (it == job_order.end()) return;
            jobs.erase(*it);
            job_order.erase(it);
        }
    }

    std::shared_ptr<Job> find_job(const std::string& id) {
        const auto it = jobs.find(id);
        return it == jobs.end() ? nullptr : it->second;
    }

    void routes() {
        http.set_payload_max_length(cfg.max_upload);
        http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        http.Options(".*", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
        http.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                      std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                send_json(res, 500, {{"error", e.what()}});
            } catch (...) {
                send_json(res, 500, {{"error", "internal error"}});
            }
        });

        http.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}});
        });

        http.Get("/manifest", [](const httplib::Request& req, httplib::Response& res) {
            if (req.get_param_value("format") == "csv") {
                res.set_content(Manifest::builtin().to_csv(), "text/csv");
                return;
            }
            send_json(res, 200, manifest_json());
        });

        http.Get("/sample.csv", [this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Content-Disposition", "attachment; filename=\"sample.csv\"");
            res.set_content(sample_csv, "text/csv");
        });

        http.Post("/datasets", [this](const httplib::Request& req, httplib::Response& res) {
            if (req.body.size() > cfg.max_upload) {
                send_json(res, 413, {{"error", "upload exceeds the size limit"}});
                return;
            }
            ObservedDataset data;
            try {
                data = parse_input(req.body);
            } catch (const ValidationError& e) {
                send_json(res, 422, error_body(e));
                return;
            }
            json body{{"points", data.time.size()}, {"parameters", data.parameters.size()}};
            json columns = json::array({"time", "plasma"});
            for (std::size_t c = 0; c < kCompartmentCount; ++c) {
                if (data.observed[c]) columns.push_back(std::string(kCompartmentColumns[c]));
            }
            body["columns"] = std::move(columns);
            std::lock_guard lock(mutex);
            const std::string id = "d" + std::to_string(next_dataset++);
            datasets[id] = std::make_shared<const ObservedDataset>(std::move(data));
            dataset_order.push_back(id);
            while (datasets.size() > cfg.max_datasets) {
                datasets.erase(dataset_order.front());
                dataset_order.pop_front();
            }
            body["id"] = id;
            send_json(res, 201, body);
        });

        http.Get(R"(/datasets/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::shared_ptr<const ObservedDataset> data;
            {
                std::lock_guard lock(mutex);
                const auto it = datasets.find(req.matches[1]);
                if (it != datasets.end()) data = it->second;
            }
            if (!data) {
                send_json(res, 404, {{"error", "unknown dataset"}});
                return;
            }
            json body = dataset_json(*data);
            body["id"] = req.matches[1];
            send_json(res, 200, body);
        });

        http.Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
            json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object()) {
                send_json(res, 400, {{"error", "request body must be a JSON object"}});
                return;
            }
            if (!body.contains("dataset") || !body.at("dataset").is_string()) {
                send_json(res, 422, {{"error", "field 'dataset' is required"}});
                return;
            }
            const std::string dataset_id = body.at("dataset").get<std::string>();
            std::shared_ptr<const ObservedDataset> data;
            {
                std::lock_guard lock(mutex);
                const auto it = datasets.find(dataset_id);
                if (it != datasets.end()) data = it->second;
            }
            if (!data) {
                send_json(res, 404, {{"error", "unknown dataset '" + dataset_id + "'"}});
                return;
            }
            auto job = std::make_shared<Job>();
            try {
                job->request = parse_request(body, *data);
            } catch (const ValidationError& e) {
                send_json(res, 422, error_body(e));
                return;
            }
            job->data = std::move(data);
            job->dataset_id = dataset_id;
            json out;
            {
                std::lock_guard lock(mutex);
                job->id = "j" + std::to_string(next_job++);
                job->submitted = timestamp();
                jobs[job->id] = job;
                job_order.push_back(job->id);
                queue.push_back(job);
                evict_jobs();
                out = job_json(*job);
            }
            queue_cv.notify_one();
            send_json(res, 201, out);
        });

        http.Get("/jobs", [this](const httplib::Request&, httplib::Response& res) {
            json list = json::array();
            std::lock_guard lock(mutex);
            for (const auto& id : job_order) list.push_back(job_json(*jobs.at(id)));
            send_json(res, 200, list);
        });

        http.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex);
            const auto job = find_job(req.matches[1]);
            if (!job) return send_json(res, 404, {{"error", "unknown job"}});
            send_json(res, 200, job_json(*job));
        });

        http.Get(R"(/jobs/([^/]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
            std::shared_ptr<Job> job;
            {
                std::lock_guard lock(mutex);
                job = find_job(req.matches[1]);
                if (!job) return send_json(res, 404, {{"error", "unknown job"}});
                if (job->state != State::done) {
                    return send_json(res, 409, {{"error", std::string("job is ") + state_name(job->state)},
                                                {"state", state_name(job->state)}});
                }
            }
            // A done job's result is immutable, so it is read without the lock.
            json body = result_json(*job->result);
            body["id"] = job->id;
            send_json(res, 200, body);
        });

        http.Get(R"(/jobs/([^/]+)/result\.csv)", [this](const httplib::Request& req,
                                                       httplib::Response& res) {
            std::shared_ptr<Job> job;
            {
                std::lock_guard lock(mutex);
                job = find_job(req.matches[1]);
                if (!job) return send_json(res, 404, {{"error", "unknown job"}});
                if (job->state != State::done) {
                    return send_json(res, 409, {{"error", std::string("job is ") + state_name(job->state)},
                                                {"state", state_name(job->state)}});
                }
            }
            const auto tables = result_tables(*job->result);
            const std::string wanted = req.get_param_value("table");
            for (const auto& [file, bytes] : tables) {
                const std::string stem = file.substr(0, file.size() - 4);
                if (wanted.empty() || wanted == stem || wanted == file) {
                    res.set_header("Content-Disposition", "attachment; filename=\"" + file + "\"");
                    res.set_content(bytes, "text/csv");
                    return;
                }
            }
            json names = json::array();
            for (const auto& t : tables) names.push_back(t.first.substr(0, t.first.size() - 4));
            send_json(res, 404, {{"error", "unknown table '" + wanted + "'"}, {"tables", names}});
        });

        http.Delete(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex);
            const auto job = find_job(req.matches[1]);
            if (!job) return send_json(res, 404, {{"error", "unknown job"}});
            if (finished(job->state)) {
                return send_json(res, 409, {{"error", std::string("job already ") + state_name(job->state)},
                                            {"state", state_name(job->state)}});
            }
            job->cancel_requested = true;
            job->stop.request_stop();
            if (job->state == State::queued) advance(*job, State::cancelled);
            send_json(res, job->state == State::cancelled ? 200 : 202, job_json(*job));
        });
    }
};

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>(cfg)) {}

Service::~Service() {
    stop();
}

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->http.bind_to_any_port(host);
    return impl_->http.bind_to_port(host, port) ? port : -1;
}

void Service::serve() { impl_->http.listen_after_bind(); }

void Service::stop() {
    if (impl_) impl_->http.stop();
}

}  // namespace cnspk
