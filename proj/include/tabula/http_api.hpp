#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "tabula/instance.hpp"
#include "tabula/instance_io.hpp"
#include "tabula/model.hpp"

namespace tabula {

/// Full view of one revision as the web client sees it.
///
///   {"revision": 3, "model": "<DSL text>", "width": 2, "height": 12,
///    "classes": [{"name", "color", "role", "expand", "range": [[c,r],[c,r]]}],
///    "cells": [{"addr", "col", "row", "point": [c,r], "kind", "value", "display",
///               "formula"?, "error"?, "owner", "color", "editable"}],
///    "objects": {...},          // as in instance files
///    "blocks": [{"class", "axis", "ctx", "first", "last"}],
///    "slots": [{"class", "parent", "count"}]}
///
/// `color` is the class's position in the model's class list, so it is stable for a
/// given model. Blocks give the rows (or columns) each object occupies, zero-based.
/// Slots are the places where add-object can insert.
Json snapshot_json(const TabulaModel& model, const InstanceDoc& doc, long revision);

struct HttpReply {
  int status = 200;
  std::string body;
  std::string contentType = "application/json";
};

/// One editable (model, instance) pair behind the HTTP endpoints; no networking here.
///
/// Every exposed revision conforms. Mutations are serialized and a batch of ops
/// is applied as a whole or not at all. Readers copy a shared pointer to an immutable
/// state, so they never wait on a running mutation.
///
/// Request bodies for the two ops endpoints:
///   {"baseRev": 0, "ops": [<op object or op line>, ...]}
/// Model ops are never forced here, since a forced edit may leave violations.
/// Replies: 200 with a snapshot, 409 when baseRev is stale, 400 for malformed bodies
/// and 422 when an op is refused:
///   {"revision": 0, "index": 1, "errors": [{"kind", "addr" | "rule", "message"}]}
class Session {
public:
  struct Files {
    std::filesystem::path model;
    std::filesystem::path instance;
    std::string modelRef;  // written into the instance file
  };

  Session(TabulaModel model, InstanceDoc doc);

  /// Accepted revisions are written to these files.
  void persist_to(Files files);

  struct State {
    TabulaModel model;
    InstanceDoc doc;
    long revision = 0;
  };

  /// The current revision; it stays valid and unchanged after later edits.
  std::shared_ptr<const State> current() const;
  long revision() const;

  HttpReply state() const;
  HttpReply metrics() const;
  HttpReply export_csv(const std::string& mode) const;
  HttpReply post_instance_ops(const std::string& body);
  HttpReply post_model_ops(const std::string& body);

private:
  template <class Apply>
  HttpReply mutate(const std::string& body, Apply&& apply);

  mutable std::mutex swap_;  // guards state_ only for the pointer copy
  std::mutex write_;         // one mutation at a time
  std::shared_ptr<const State> state_;
  std::optional<Files> files_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path staticDir;  // empty: built-in page
};

/// The endpoints over HTTP:
///   GET  /api/state            GET /api/metrics
///   POST /api/instance/ops     POST /api/model/ops
///   GET  /api/export.csv?mode=values|formulas
/// Anything else is looked up in the static directory, or gets the built-in page.
class HttpServer {
public:
  HttpServer(Session& session, ServeOptions options);
  ~HttpServer();

  /// Opens the socket and returns the bound port; throws Error(Io).
  int bind();
  /// Serves until stop() is called from another thread.
  void run();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tabula
