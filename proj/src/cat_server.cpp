#include "mfed/cat_server.hpp"

#include <fstream>
#include <mutex>

#include "mfed/errors.hpp"

using nlohmann::json;

namespace mfed::cat {

namespace {

proto::ProtoServer::AuditSink file_audit(std::filesystem::path path) {
    if (path.empty()) return nullptr;
    auto mu = std::make_shared<std::mutex>();
    return [path, mu](const std::string& ts, const std::string& node, const char* kind) {
        std::lock_guard lk(*mu);
        std::ofstream out(path, std::ios::app);
        out << ts << " " << node << " " << kind << "\n";
    };
}

}  // namespace

CatalogueServer::CatalogueServer(Catalogue& catalogue, const std::string& host,
                                 std::uint16_t port, proto::Roster roster, std::string server_id,
                                 std::filesystem::path audit_log)
    : catalogue_(catalogue) {
    server_ = std::make_unique<proto::ProtoServer>(
        host, port, std::move(roster), std::move(server_id),
        [this](const proto::SessionInfo& s, proto::Kind k, const json& b) {
            return handle(s, k, b);
        },
        file_audit(std::move(audit_log)));
}

std::pair<proto::Kind, json> CatalogueServer::handle(const proto::SessionInfo& session,
                                                     proto::Kind kind, const json& body) {
    switch (kind) {
        case proto::Kind::CatRegister: {
            std::string op = body.value("op", "register");
            if (op == "register") {
                ReplicaEntry e = ReplicaEntry::from_json(body);
                if (e.node_id != session.node_id && session.role != "admin")
                    throw FedError(ErrorCode::Unauthorized,
                                   "session " + session.node_id +
                                       " may not register replicas for " + e.node_id);
                std::size_t n = catalogue_.register_file(e);
                return {proto::Kind::CatRegister, json{{"replicas", n}}};
            }
            if (op == "remove") {
                std::string lfn = body.value("lfn", "");
                std::string node_id = body.value("node_id", "");
                if (node_id != session.node_id && session.role != "admin")
                    throw FedError(ErrorCode::Unauthorized,
                                   "session " + session.node_id +
                                       " may not remove replicas for " + node_id);
                std::size_t n = catalogue_.remove_replica(lfn, node_id);
                return {proto::Kind::CatRegister, json{{"replicas", n}}};
            }
            throw err_malformed("CAT_REGISTER op must be register or remove");
        }
        case proto::Kind::CatResolve: {
            auto replicas = catalogue_.resolve(body.value("lfn", ""));
            json arr = json::array();
            for (const auto& e : replicas) arr.push_back(e.to_json());
            return {proto::Kind::CatResolve, json{{"replicas", arr}}};
        }
        case proto::Kind::CatList: {
            std::optional<std::string> after;
            if (body.contains("after")) after = body["after"].get<std::string>();
            auto page = catalogue_.list(body.value("prefix", "/"),
                                        body.value("limit", std::size_t{0}), after);
            json reply{{"names", page.names}};
            if (page.next) reply["next"] = *page.next;
            return {proto::Kind::CatList, reply};
        }
        default:
            throw err_malformed(std::string("catalogue does not serve ") + kind_name(kind));
    }
}

}  // namespace mfed::cat
