#include "harness.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <unistd.h>

#include "cli.hpp"

#include <httplib.h>

namespace harness {

struct LiveService::Impl {
    explicit Impl(cnspk::ServiceConfig cfg) : service(cfg) {}
    cnspk::Service service;
    std::jthread thread;
};

namespace {

Response convert(const httplib::Result& r) {
    if (!r) return {};
    return {r->status, r->body, r->get_header_value("Content-Type")};
}

}  // namespace

LiveService::LiveService(cnspk::ServiceConfig cfg) : impl_(std::make_unique<Impl>(cfg)) {
    port_ = impl_->service.bind("127.0.0.1", 0);
    if (port_ < 0) throw std::runtime_error("could not bind a test port");
    impl_->thread = std::jthread([this] { impl_->service.serve(); });
    for (int i = 0; i < 500; ++i) {
        if (get("/health").status == 200) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    throw std::runtime_error("service did not come up");
}

LiveService::~LiveService() {
    impl_->service.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

Response LiveService::get(const std::string& path) const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60);
    return convert(c.Get(path));
}

Response LiveService::post(const std::string& path, const std::string& body,
                           const std::string& type) const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60);
    return convert(c.Post(path, body, type));
}

Response LiveService::del(const std::string& path) const {
    httplib::Client c("127.0.0.1", port_);
    return convert(c.Delete(path));
}

Response LiveService::options(const std::string& path) const {
    httplib::Client c("127.0.0.1", port_);
    return convert(c.Options(path));
}

std::string LiveService::upload(const std::string& csv) const {
    const auto r = post("/datasets", csv, "text/csv");
    if (r.status != 201) return {};
    return r.json().at("id").get<std::string>();
}

std::string LiveService::submit(const nlohmann::json& request) const {
    const auto r = post("/jobs", request.dump(), "application/json");
    if (r.status != 201) return {};
    return r.json().at("id").get<std::string>();
}

nlohmann::json LiveService::wait(const std::string& job, std::chrono::seconds timeout) const {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
        const auto r = get("/jobs/" + job);
        if (r.status != 200) throw std::runtime_error("job lookup failed: " + job);
        auto j = r.json();
        const auto state = j.at("state").get<std::string>();
        if (state != "queued" && state != "running") return j;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    throw std::runtime_error("job did not finish: " + job);
}

CliRun run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"cnspk"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cnspk::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
}

std::filesystem::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("cnspk-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace harness
