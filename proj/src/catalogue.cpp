#include "mfed/catalogue.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstring>
#include <mutex>
#include <fstream>

#include "mfed/errors.hpp"
#include "mfed/lfn.hpp"
#include "mfed/util.hpp"

using nlohmann::json;

namespace mfed::cat {

json ReplicaEntry::to_json() const {
    return json{{"lfn", lfn},           {"node_id", node_id},
                {"local_path", local_path}, {"size", size_bytes},
                {"checksum", checksum}, {"registered_at", registered_at}};
}

ReplicaEntry ReplicaEntry::from_json(const json& j) {
    ReplicaEntry e;
    try {
        e.lfn = j.at("lfn").get<std::string>();
        e.node_id = j.at("node_id").get<std::string>();
        e.local_path = j.at("local_path").get<std::string>();
        e.size_bytes = j.at("size").get<std::uint64_t>();
        e.checksum = j.at("checksum").get<std::string>();
        e.registered_at = j.value("registered_at", "");
    } catch (const json::exception& ex) {
        throw err_malformed(std::string("replica entry: ") + ex.what());
    }
    return e;
}

void check_replica_entry(const ReplicaEntry& e) {
    check_lfn(e.lfn);
    if (e.node_id.empty()) throw err_malformed("replica node_id must be nonempty");
    for (char c : e.node_id)
        if (!is_valid_lfn_component_char(c))
            throw err_malformed("replica node_id has invalid characters: " + e.node_id);
    if (e.local_path.empty()) throw err_malformed("replica local_path must be nonempty");
    if (e.checksum.size() != 64) throw err_malformed("replica checksum must be 64 hex chars");
    for (char c : e.checksum)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
            throw err_malformed("replica checksum must be lowercase hex");
}

Catalogue::Catalogue(std::filesystem::path log_path, bool sync)
    : log_path_(std::move(log_path)), sync_(sync) {
    load();
}

Catalogue::~Catalogue() {
    if (log_fd_ >= 0) ::close(log_fd_);
}

void Catalogue::load() {
    std::unique_lock lk(mu_);
    entries_.clear();
    bool needs_compaction = false;
    std::size_t removes = 0;
    if (std::filesystem::exists(log_path_)) {
        std::ifstream in(log_path_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                // torn tail from an interrupted append; drop it on compaction
                needs_compaction = true;
                break;
            }
            std::string op = j.value("op", "");
            if (op == "register") {
                ReplicaEntry e = ReplicaEntry::from_json(j);
                e.registered_at = j.value("timestamp", e.registered_at);
                entries_[e.lfn][e.node_id] = std::move(e);
            } else if (op == "remove") {
                ++removes;
                auto it = entries_.find(j.value("lfn", ""));
                if (it != entries_.end()) {
                    it->second.erase(j.value("node_id", ""));
                    if (it->second.empty()) entries_.erase(it);
                }
            }
        }
    } else if (log_path_.has_parent_path()) {
        std::filesystem::create_directories(log_path_.parent_path());
    }
    if (removes > 0 || needs_compaction) compact_locked();
    log_fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (log_fd_ < 0) throw err_internal("cannot open catalogue log " + log_path_.string());
}

void Catalogue::compact_locked() {
    std::filesystem::path tmp = log_path_;
    tmp += ".compact";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw err_internal("cannot write " + tmp.string());
        for (const auto& [lfn, replicas] : entries_) {
            for (const auto& [node, e] : replicas) {
                json line{{"op", "register"},      {"lfn", e.lfn},
                          {"node_id", e.node_id},  {"local_path", e.local_path},
                          {"size", e.size_bytes},  {"checksum", e.checksum},
                          {"timestamp", e.registered_at}};
                out << line.dump() << "\n";
            }
        }
        out.flush();
        if (!out) throw err_internal("short write compacting catalogue log");
    }
    std::filesystem::rename(tmp, log_path_);
}

void Catalogue::append_log(const json& line) {
    std::string text = line.dump() + "\n";
    const char* p = text.data();
    std::size_t left = text.size();
    while (left > 0) {
        ssize_t n = ::write(log_fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw err_internal(std::string("catalogue log write: ") + std::strerror(errno));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (sync_ && ::fsync(log_fd_) != 0)
        throw err_internal("catalogue log fsync failed");
}

std::size_t Catalogue::register_file(const ReplicaEntry& entry) {
    check_replica_entry(entry);
    ReplicaEntry e = entry;
    if (e.registered_at.empty()) e.registered_at = util::now_iso8601();

    std::unique_lock lk(mu_);
    auto it = entries_.find(e.lfn);
    if (it != entries_.end()) {
        const ReplicaEntry& existing = it->second.begin()->second;
        if (existing.checksum != e.checksum)
            throw err_conflict("lfn " + e.lfn + " already registered with different checksum");
        if (existing.size_bytes != e.size_bytes)
            throw err_conflict("lfn " + e.lfn + " already registered with different size");
        if (it->second.count(e.node_id))
            throw err_conflict("replica (" + e.lfn + ", " + e.node_id + ") already registered");
    }
    append_log(json{{"op", "register"},     {"lfn", e.lfn},
                    {"node_id", e.node_id}, {"local_path", e.local_path},
                    {"size", e.size_bytes}, {"checksum", e.checksum},
                    {"timestamp", e.registered_at}});
    auto& replicas = entries_[e.lfn];
    replicas[e.node_id] = std::move(e);
    return replicas.size();
}

std::vector<ReplicaEntry> Catalogue::resolve(const std::string& lfn) const {
    check_lfn(lfn);
    std::shared_lock lk(mu_);
    auto it = entries_.find(lfn);
    if (it == entries_.end()) throw err_not_found("no replica registered for " + lfn);
    std::vector<ReplicaEntry> out;
    out.reserve(it->second.size());
    for (const auto& [node, e] : it->second) out.push_back(e);  // node_id ascending
    return out;
}

std::size_t Catalogue::remove_replica(const std::string& lfn, const std::string& node_id) {
    check_lfn(lfn);
    std::unique_lock lk(mu_);
    auto it = entries_.find(lfn);
    if (it == entries_.end() || !it->second.count(node_id))
        throw err_not_found("no replica (" + lfn + ", " + node_id + ")");
    append_log(json{{"op", "remove"},     {"lfn", lfn},  {"node_id", node_id},
                    {"local_path", ""},   {"size", 0},   {"checksum", ""},
                    {"timestamp", util::now_iso8601()}});
    it->second.erase(node_id);
    std::size_t remaining = it->second.size();
    if (remaining == 0) entries_.erase(it);
    return remaining;
}

ListPage Catalogue::list(const std::string& prefix, std::size_t limit,
                         const std::optional<std::string>& after) const {
    if (!is_valid_lfn_prefix(prefix)) throw err_malformed("invalid list prefix: " + prefix);
    if (limit == 0) limit = 1000;
    limit = std::min<std::size_t>(limit, 10000);

    std::shared_lock lk(mu_);
    ListPage page;
    // continuation tokens come from our own pages and carry the prefix;
    // anything lexicographically before it is ignored
    bool use_after = after && *after >= prefix;
    auto it = entries_.lower_bound(use_after ? *after : prefix);
    if (use_after && it != entries_.end() && it->first == *after) ++it;
    for (; it != entries_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        if (page.names.size() == limit) {
            page.next = page.names.back();
            return page;
        }
        page.names.push_back(it->first);
    }
    return page;
}

std::size_t Catalogue::lfn_count() const {
    std::shared_lock lk(mu_);
    return entries_.size();
}

}  // namespace mfed::cat
