#ifndef MFED_CAT_SERVER_HPP
#define MFED_CAT_SERVER_HPP

#include <filesystem>
#include <memory>

#include "mfed/catalogue.hpp"
#include "mfed/server.hpp"

namespace mfed::cat {

// Serves a Catalogue over proto kinds 0x10-0x12.
class CatalogueServer {
public:
    CatalogueServer(Catalogue& catalogue, const std::string& host, std::uint16_t port,
                    proto::Roster roster, std::string server_id,
                    std::filesystem::path audit_log = {});

    void start() { server_->start(); }
    void stop() { server_->stop(); }
    std::string address() const { return server_->address(); }
    std::uint16_t port() const { return server_->port(); }

private:
    std::pair<proto::Kind, nlohmann::json> handle(const proto::SessionInfo& session,
                                                  proto::Kind kind, const nlohmann::json& body);

    Catalogue& catalogue_;
    std::unique_ptr<proto::ProtoServer> server_;
};

}  // namespace mfed::cat

#endif
