#ifndef CNSPK_SERVICE_HPP
#define CNSPK_SERVICE_HPP

#include <cstddef>
#include <memory>
#include <string>

namespace cnspk {

struct ServiceConfig {
    std::size_t workers = 2;         ///< jobs computed concurrently
    std::size_t max_jobs = 100;      ///< finished jobs beyond this are forgotten, oldest first
    std::size_t max_datasets = 100;  ///< uploads beyond this are forgotten, oldest first
    std::size_t max_upload = 20u * 1024u * 1024u;  ///< bytes; larger bodies get 413
};

/// Port from the CNSPK_PORT environment variable, else 8080.
int default_port();

/// HTTP front end.
///
///   POST   /datasets                 CSV body -> 201 {id}; 422 with row/column; 413 oversize
///   GET    /datasets/{id}            parsed dataset as JSON
///   POST   /jobs                     JSON request -> 201 job
///   GET    /jobs                     all retained jobs
///   GET    /jobs/{id}                job with live progress
///   GET    /jobs/{id}/result         result JSON; 409 until state is done
///   GET    /jobs/{id}/result.csv     ?table=<name>; first table by default
///   DELETE /jobs/{id}                request cancellation; 409 once finished
///   GET    /manifest                 parameter manifest (JSON, or ?format=csv)
///   GET    /sample.csv               shipped sample dataset
class Service {
public:
    explicit Service(ServiceConfig cfg = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds without serving; port 0 picks a free port. Returns the bound port
    /// or -1.
    int bind(const std::string& host, int port);
    /// Serves on the bound socket until stop(). Blocks.
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cnspk

#endif  // CNSPK_SERVICE_HPP
