#ifndef MFED_ANONYMIZE_HPP
#define MFED_ANONYMIZE_HPP

#include <filesystem>
#include <json.hpp>
#include <map>
#include <mutex>
#include <string>

namespace mfed::anon {

// Deterministic keyed pseudonym: "P-" + first 16 hex chars of
// HMAC-SHA256(site_key, patient_id). Malformed on an empty id.
std::string pseudonymize(const std::string& patient_id, const std::string& site_key);

// Site-local pseudonym -> original-identifier table, encrypted at rest with
// keys derived from the site key. Never crosses the wire; the file lives only
// under the originating node's data directory.
class ReidentificationMap {
public:
    ReidentificationMap(std::filesystem::path path, std::string site_key);

    // Upsert; no-op when the pseudonym is already recorded.
    void record(const std::string& pseudonym, const nlohmann::json& identifiers);

    // Decrypts and returns the identifiers, or null when unknown.
    nlohmann::json lookup(const std::string& pseudonym) const;

    std::size_t size() const;

private:
    void load();

    std::filesystem::path path_;
    std::string site_key_;
    mutable std::mutex mu_;
    std::map<std::string, nlohmann::json> entries_;
};

struct StripResult {
    nlohmann::json sanitized;    // header with identifiers removed
    nlohmann::json identifiers;  // {patient_name, patient_id, birth_date}
    std::string pseudonym;
};

// De-identifies a container header: patient_name removed, patient_id replaced
// by the pseudonym, birth_date coarsened to birth_year; everything else passes
// through. ConsentMissing (Unauthorized) when consent != "Y".
StripResult strip_identifiers(const nlohmann::json& header, const std::string& site_key);

// Authenticated per-line encryption for the map file (SHA-256 CTR keystream +
// truncated HMAC tag, domain-separated keys). Exposed for tests.
std::string encrypt_line(const std::string& plaintext, const std::string& site_key,
                         std::uint64_t nonce);
std::string decrypt_line(const std::string& line, const std::string& site_key);

}  // namespace mfed::anon

#endif
