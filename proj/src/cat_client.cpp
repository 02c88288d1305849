#include "mfed/cat_client.hpp"

using nlohmann::json;

namespace mfed::cat {

std::size_t CatalogueClient::register_file(const ReplicaEntry& entry) {
    json body = entry.to_json();
    body["op"] = "register";
    body["size"] = entry.size_bytes;
    auto reply = session_.call_expect(proto::Kind::CatRegister, body, proto::Kind::CatRegister);
    return reply.at("replicas").get<std::size_t>();
}

std::size_t CatalogueClient::remove_replica(const std::string& lfn, const std::string& node_id) {
    json body{{"op", "remove"}, {"lfn", lfn}, {"node_id", node_id}};
    auto reply = session_.call_expect(proto::Kind::CatRegister, body, proto::Kind::CatRegister);
    return reply.at("replicas").get<std::size_t>();
}

std::vector<ReplicaEntry> CatalogueClient::resolve(const std::string& lfn) {
    auto reply = session_.call_expect(proto::Kind::CatResolve, json{{"lfn", lfn}},
                                      proto::Kind::CatResolve);
    std::vector<ReplicaEntry> out;
    for (const auto& j : reply.at("replicas")) out.push_back(ReplicaEntry::from_json(j));
    return out;
}

ListPage CatalogueClient::list(const std::string& prefix, std::size_t limit,
                               const std::optional<std::string>& after) {
    json body{{"prefix", prefix}, {"limit", limit}};
    if (after) body["after"] = *after;
    auto reply = session_.call_expect(proto::Kind::CatList, body, proto::Kind::CatList);
    ListPage page;
    page.names = reply.at("names").get<std::vector<std::string>>();
    if (reply.contains("next")) page.next = reply["next"].get<std::string>();
    return page;
}

}  // namespace mfed::cat
