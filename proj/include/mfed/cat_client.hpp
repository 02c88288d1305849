#ifndef MFED_CAT_CLIENT_HPP
#define MFED_CAT_CLIENT_HPP

#include "mfed/catalogue.hpp"
#include "mfed/rpc.hpp"

namespace mfed::cat {

// Client view of the catalogue service.
class CatalogueClient {
public:
    CatalogueClient(const std::string& address, const proto::AuthToken& token)
        : session_(address, token) {}

    std::size_t register_file(const ReplicaEntry& entry);
    std::size_t remove_replica(const std::string& lfn, const std::string& node_id);
    std::vector<ReplicaEntry> resolve(const std::string& lfn);
    ListPage list(const std::string& prefix, std::size_t limit,
                  const std::optional<std::string>& after = std::nullopt);

private:
    proto::Session session_;
};

}  // namespace mfed::cat

#endif
