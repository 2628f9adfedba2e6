#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "blobmask/errors.hpp"
#include "blobmask/guidance.hpp"
#include "blobmask/wire.hpp"

namespace blobmask {

/// Delays between attempts after a transport failure. The default makes
/// four attempts in total: 0.5 s, 1 s and 2 s apart.
struct RetryPolicy {
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(500),
                                                 std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(2000)};
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{600};
};

namespace detail {

struct Endpoint {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // without trailing slash
};

inline Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("endpoint must look like http://host:port");
  const auto slash = url.find('/', scheme + 3);
  Endpoint ep{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  return ep;
}

/// POSTs JSON with retries. Connection failures and 5xx responses are
/// retried; 4xx responses raise ProtocolError carrying the server's message.
inline std::string post_json(const Endpoint& ep, const std::string& path, const std::string& body,
                             const RetryPolicy& retry) {
  httplib::Client client(ep.origin);
  client.set_connection_timeout(retry.connect_timeout);
  client.set_read_timeout(retry.read_timeout);
  const std::string target = ep.base_path + path;

  std::string last_error;
  for (std::size_t attempt = 0;; ++attempt) {
    auto res = client.Post(target, body, "application/json");
    if (res) {
      if (res->status == 200) return res->body;
      std::string message = res->body;
      try {
        const auto j = nlohmann::json::parse(res->body);
        if (j.is_object() && j.contains("error") && j["error"].is_string()) {
          message = j["error"].get<std::string>();
        }
      } catch (const nlohmann::json::exception&) {
      }
      if (res->status >= 400 && res->status < 500) {
        throw ProtocolError(path + " rejected with status " + std::to_string(res->status) + ": " +
                            message);
      }
      last_error = "status " + std::to_string(res->status) + ": " + message;
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt >= retry.backoff.size()) break;
    std::this_thread::sleep_for(retry.backoff[attempt]);
  }
  throw TransportError(ep.origin + target + " failed after " +
                       std::to_string(retry.backoff.size() + 1) + " attempts: " + last_error);
}

}  // namespace detail

/// Client for a score-distillation service speaking the /sds_grad protocol.
/// The request seed is base_seed XOR step_index.
class RemoteSdsOracle final : public GuidanceOracle {
 public:
  RemoteSdsOracle(const std::string& endpoint_url, std::string prompt, double guidance_scale,
                  double t_min = 0.02, double t_max = 0.98, RetryPolicy retry = {})
      : endpoint_(detail::split_endpoint(endpoint_url)),
        prompt_(std::move(prompt)),
        guidance_scale_(guidance_scale),
        t_min_(t_min),
        t_max_(t_max),
        retry_(std::move(retry)) {
    if (!(t_min_ > 0.0 && t_max_ < 1.0 && t_min_ < t_max_)) {
      throw ValidationError("need 0 < t_min < t_max < 1");
    }
  }

  wire::SdsRequest make_request(const ImageBuffer& image, std::int64_t step_index,
                                std::uint64_t rng_seed) const {
    wire::SdsRequest req;
    req.prompt = prompt_;
    req.guidance_scale = guidance_scale_;
    req.image = wire::to_tensor(image);
    req.seed = rng_seed ^ static_cast<std::uint64_t>(step_index);
    req.t_min = t_min_;
    req.t_max = t_max_;
    return req;
  }

  GuidanceOutput evaluate(const ImageBuffer& image, std::int64_t step_index,
                          std::uint64_t rng_seed) override {
    const auto req = make_request(image, step_index, rng_seed);
    const std::string body =
        detail::post_json(endpoint_, "/sds_grad", wire::to_json(req).dump(), retry_);
    const auto resp = wire::parse_sds_response(body, image.height(), image.width());
    GuidanceOutput out{wire::to_image(resp.grad), resp.loss};
    if (!all_finite(out.grad)) throw ProtocolError("/sds_grad returned non-finite gradient values");
    return out;
  }

 private:
  detail::Endpoint endpoint_;
  std::string prompt_;
  double guidance_scale_;
  double t_min_;
  double t_max_;
  RetryPolicy retry_;
};

/// Client for the mask-conditioned /inpaint endpoint.
class InpaintClient {
 public:
  explicit InpaintClient(const std::string& endpoint_url, RetryPolicy retry = {})
      : endpoint_(detail::split_endpoint(endpoint_url)), retry_(std::move(retry)) {}

  Image8 inpaint(const wire::InpaintRequest& req) const {
    const std::string body =
        detail::post_json(endpoint_, "/inpaint", wire::to_json(req).dump(), retry_);
    Image8 out = wire::parse_inpaint_response(body);
    if (out.width != req.image.width || out.height != req.image.height) {
      throw ProtocolError("/inpaint returned " + std::to_string(out.width) + "x" +
                          std::to_string(out.height) + ", expected " +
                          std::to_string(req.image.width) + "x" + std::to_string(req.image.height));
    }
    return out;
  }

 private:
  detail::Endpoint endpoint_;
  RetryPolicy retry_;
};

}  // namespace blobmask
