#include "straggler/sim.hpp"

#include <algorithm>
#include <cmath>

#include "straggler/log.hpp"

namespace straggler::sim {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::job_arrival: return "job_arrival";
    case EventKind::interval_boundary: return "interval_boundary";
    case EventKind::task_complete: return "task_complete";
    case EventKind::host_fault: return "host_fault";
    case EventKind::task_fault: return "task_fault";
    case EventKind::vm_creation_fault: return "vm_creation_fault";
    case EventKind::host_recover: return "host_recover";
    case EventKind::mitigation_check: return "mitigation_check";
  }
  return "unknown";
}

bool event_before(const SimEvent& x, const SimEvent& y) {
  if (x.time != y.time) return x.time < y.time;
  if (x.kind != y.kind) return static_cast<int>(x.kind) < static_cast<int>(y.kind);
  return x.seq < y.seq;
}

void EventQueue::push(SimEvent e) {
  if (last_ && e.time < last_->time) throw SimError("event scheduled in the past");
  e.seq = next_seq_++;
  heap_.push(e);
}

SimEvent EventQueue::pop() {
  if (heap_.empty()) throw SimError("pop from empty event queue");
  SimEvent e = heap_.top();
  heap_.pop();
  if (last_ && event_before(e, *last_)) throw SimError("event queue popped out of order");
  last_ = e;
  return e;
}

double host_power(const Host& h) {
  if (!h.online || h.cpu_capacity <= 0) return h.power_min;
  const double u = std::clamp(h.cpu_used / h.cpu_capacity, 0.0, 1.0);
  return h.power_min + u * (h.power_max - h.power_min);
}

namespace {

constexpr std::uint64_t kHostFaultRng = 1;
constexpr std::uint64_t kVmFaultRng = 2;
constexpr std::uint64_t kTaskFaultRng = 3;

std::size_t at(HostId h) { return static_cast<std::size_t>(h); }

std::vector<Host> checked_hosts(std::vector<Host> hosts) {
  if (hosts.empty()) throw SimError("fleet has no hosts");
  for (std::size_t i = 0; i < hosts.size(); ++i) {
    if (hosts[i].id != static_cast<HostId>(i)) throw SimError("host ids must be 0..n-1 in order");
    if (!(hosts[i].cpu_capacity > 0)) throw SimError("host with non-positive CPU capacity");
    if (hosts[i].power_min < 0 || hosts[i].power_min > hosts[i].power_max)
      throw SimError("host power bounds must satisfy 0 <= min <= max");
  }
  return hosts;
}

}  // namespace

Simulator::Simulator(SimConfig config, const Trace& trace, mitigation::Policy& policy)
    : Simulator(config, build_fleet(config), trace, policy) {}

Simulator::Simulator(SimConfig config, std::vector<Host> hosts, const Trace& trace, mitigation::Policy& policy)
    : config_(std::move(config)), policy_(policy), scheduler_rng_(make_stream(config_.seed, Stream::scheduler)) {
  config_.validate();
  state_.hosts = checked_hosts(std::move(hosts));
  state_.interval_length = config_.interval_seconds;
  state_.straggler_ema_per_host.assign(state_.hosts.size(), 0.0);
  host_copies_.resize(state_.hosts.size());
  acc_.resize(state_.hosts.size());
  lowest_power_ = std::numeric_limits<double>::infinity();
  highest_power_ = -std::numeric_limits<double>::infinity();
  for (const Host& h : state_.hosts) {
    acc_[at(h.id)].power_min_seen = acc_[at(h.id)].power_max_seen = host_power(h);
    note_power(h);
  }

  const double S = config_.interval_seconds;
  for (const TraceTask& row : trace) {
    if (row.arrival_interval < 0) throw SimError("trace row with negative arrival interval");
    if (row.arrival_interval >= config_.horizon_intervals) continue;
    if (!(row.cpu_mips > 0) || !(row.length_mi > 0)) throw SimError("trace task needs positive cpu and length");
    if (state_.tasks.contains(row.task_id)) throw SimError("duplicate task id in trace");
    auto [it, fresh] = state_.jobs.try_emplace(row.job_id);
    Job& job = it->second;
    const double submit = row.arrival_interval * S;
    if (fresh) {
      job.id = row.job_id;
      job.deadline_driven = row.deadline_driven;
      job.submit_time = submit;
    } else if (job.submit_time != submit) {
      throw SimError("tasks of one job arrive in different intervals");
    }
    Task t;
    t.id = row.task_id;
    t.job_id = row.job_id;
    t.cpu_req = row.cpu_mips;
    t.ram_req = row.ram_mb;
    t.disk_req = row.disk_mb;
    t.bw_req = row.bw_kbps;
    t.length = row.length_mi;
    t.submit_time = submit;
    job.tasks.push_back(t.id);
    state_.tasks.emplace(t.id, std::move(t));
  }
  for (auto& [id, job] : state_.jobs) {
    double longest = 0;
    for (TaskId tid : job.tasks) longest = std::max(longest, state_.task(tid).nominal_duration());
    job.sla_deadline = job.submit_time + config_.workload.sla_slack * longest;
    events_.push({.time = job.submit_time, .kind = EventKind::job_arrival, .a = id});
  }
  observation_offsets_ = policy_.observation_offsets();
  events_.push({.time = 0, .kind = EventKind::interval_boundary});
  if (config_.faults.enabled) init_faults();
}

Rng Simulator::entity_rng(std::uint64_t kind, std::uint64_t id, std::uint64_t serial) const {
  const std::uint64_t seed = config_.seed;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(Stream::faults), static_cast<std::uint32_t>(kind),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32),
                    static_cast<std::uint32_t>(serial)};
  return Rng(seq);
}

namespace {

double ttf_seconds(Rng& rng, const FaultConfig& f, double interval) {
  return sample_weibull_ttf(rng, f.weibull_k, f.weibull_lambda) * f.unit_intervals * interval;
}

}  // namespace

void Simulator::init_faults() {
  const auto& f = config_.faults;
  for (const Host& h : state_.hosts) {
    host_fault_rng_.push_back(entity_rng(kHostFaultRng, static_cast<std::uint64_t>(h.id)));
    vm_fault_rng_.push_back(entity_rng(kVmFaultRng, static_cast<std::uint64_t>(h.id)));
    if (f.host_faults)
      events_.push({.time = ttf_seconds(host_fault_rng_.back(), f, config_.interval_seconds),
                    .kind = EventKind::host_fault,
                    .a = h.id});
    if (f.vm_creation_faults)
      events_.push({.time = ttf_seconds(vm_fault_rng_.back(), f, config_.interval_seconds),
                    .kind = EventKind::vm_creation_fault,
                    .a = h.id});
  }
}

// ---- interval loop ----------------------------------------------------------

metrics::MetricsSample Simulator::advance_interval() {
  if (done()) throw SimError("advance_interval past the horizon");
  const int i = state_.interval_index;
  const double t_end = (i + 1) * config_.interval_seconds;
  pending_ = {};
  pending_.interval_index = i;
  while (!events_.empty() && events_.top().time < t_end) {
    const SimEvent e = events_.pop();
    state_.now = e.time;
    if (on_event) on_event(e);
    process(e);
  }
  state_.now = t_end;
  metrics::MetricsSample sample = close_interval(t_end);
  ++state_.interval_index;
  if (done())
    finalize_horizon(sample);
  else
    events_.push({.time = t_end, .kind = EventKind::interval_boundary});
  return sample;
}

std::vector<metrics::MetricsSample> Simulator::run() {
  std::vector<metrics::MetricsSample> out;
  while (!done()) out.push_back(advance_interval());
  return out;
}

void Simulator::process(const SimEvent& e) {
  switch (e.kind) {
    case EventKind::job_arrival: handle_arrival(e.a); break;
    case EventKind::interval_boundary: handle_boundary(); break;
    case EventKind::task_complete: handle_completion(e.a, e.b, e.version); break;
    case EventKind::host_fault: handle_host_fault(static_cast<HostId>(e.a)); break;
    case EventKind::task_fault: handle_task_fault(e.a, e.b); break;
    case EventKind::vm_creation_fault: handle_vm_fault(static_cast<HostId>(e.a)); break;
    case EventKind::host_recover: handle_recover(static_cast<HostId>(e.a)); break;
    case EventKind::mitigation_check: handle_observe(e.a); break;
  }
}

void Simulator::handle_arrival(JobId id) {
  const Job& job = state_.job(id);
  for (TaskId t : job.tasks) queue_.push_back(t);
  policy_.on_job_arrival(state_, job);
  for (std::size_t k = 0; k < observation_offsets_.size(); ++k)
    events_.push({.time = state_.now + observation_offsets_[k],
                  .kind = EventKind::mitigation_check,
                  .a = id,
                  .b = static_cast<std::int64_t>(k)});
}

void Simulator::handle_boundary() {
  for (Host& h : state_.hosts)
    if (!h.online && h.downtime_remaining > 1) --h.downtime_remaining;

  const double w = config_.mitigation.straggler_ema_weight;
  const double factor = config_.mitigation.straggler_factor;
  for (const Host& h : state_.hosts) {
    HostAccumulator& acc = acc_[at(h.id)];
    int count = acc.slow_completions + acc.killed;
    for (TaskId tid : host_copies_[at(h.id)]) {
      const Task& t = state_.task(tid);
      for (const TaskCopy& c : t.copies)
        if (c.host == h.id && state_.now - c.started_at > factor * t.nominal_duration()) ++count;
    }
    double& ema = state_.straggler_ema_per_host[at(h.id)];
    ema = w * count + (1 - w) * ema;
    acc.slow_completions = 0;
    acc.killed = 0;
  }

  apply(policy_.on_interval(state_));
  schedule_queue();
}

void Simulator::handle_observe(JobId id) {
  const Job& job = state_.job(id);
  apply(policy_.on_observe(state_, job));
}

// ---- placement --------------------------------------------------------------

std::optional<HostId> Simulator::pick_host(const Task& t) {
  std::vector<HostId> feasible;
  for (const Host& h : state_.hosts)
    if (h.fits(t.ram_req, t.disk_req) && h.active_task_count < config_.fleet.max_tasks_per_host)
      feasible.push_back(h.id);
  if (feasible.empty()) return std::nullopt;
  if (config_.scheduler == SchedulerKind::random)
    return feasible[static_cast<std::size_t>(uniform_int(scheduler_rng_, 0, static_cast<int>(feasible.size()) - 1))];
  HostId best = feasible.front();
  double best_load = std::numeric_limits<double>::infinity();
  for (HostId id : feasible) {
    const Host& h = state_.hosts[at(id)];
    const double load = h.cpu_demand / h.cpu_capacity;
    if (load < best_load) {
      best_load = load;
      best = id;
    }
  }
  return best;
}

void Simulator::schedule_queue() {
  const std::size_t n = queue_.size();
  for (std::size_t k = 0; k < n; ++k) {
    const TaskId id = queue_.front();
    queue_.pop_front();
    Task& t = state_.task(id);
    if (t.state != TaskState::queued) continue;
    const auto host = pick_host(t);
    if (!host) {
      queue_.push_back(id);
      continue;
    }
    Host& h = state_.hosts[at(*host)];
    if (h.vm_creation_fault_pending) {
      h.vm_creation_fault_pending = false;
      sim_log().debug("t={} placement of task {} on host {} failed (vm creation fault)", state_.now, id, *host);
      queue_.push_back(id);
      continue;
    }
    if (policy_.delay_placement(state_, t, *host)) {
      ++t.delays;
      queue_.push_back(id);
      continue;
    }
    if (t.restart_pending_since) {
      t.restart_time_total += state_.now - *t.restart_pending_since;
      t.restart_pending_since.reset();
    }
    t.state = TaskState::running;
    t.assigned_host = *host;
    t.start_time = state_.now;
    start_copy(t, *host);
    apply(policy_.on_task_placed(state_, t));
  }
}

// ---- host bookkeeping ---------------------------------------------------------

void Simulator::note_power(const Host& h) {
  const double p = host_power(h);
  HostAccumulator& acc = acc_[at(h.id)];
  acc.power_min_seen = std::min(acc.power_min_seen, p);
  acc.power_max_seen = std::max(acc.power_max_seen, p);
  lowest_power_ = std::min(lowest_power_, p);
  highest_power_ = std::max(highest_power_, p);
}

void Simulator::accumulate(HostId id) {
  const Host& h = state_.hosts[at(id)];
  HostAccumulator& acc = acc_[at(id)];
  const double dt = state_.now - acc.last_time;
  if (dt > 0) {
    acc.cpu += h.cpu_used * dt;
    acc.ram += h.ram_used * dt;
    acc.disk += h.disk_used * dt;
    acc.bw += h.bw_used * dt;
    if (h.overloaded()) acc.contention += h.cpu_demand * dt;
  }
  acc.last_time = state_.now;
}

void Simulator::rebase_host(HostId id) {
  for (TaskId tid : host_copies_[at(id)]) {
    for (TaskCopy& c : state_.task(tid).copies) {
      if (c.host != id) continue;
      c.base_progress = c.progress_at(state_.now);
      c.base_time = state_.now;
    }
  }
}

void Simulator::rebalance_host(HostId id) {
  Host& h = state_.hosts[at(id)];
  h.cpu_used = std::min(h.cpu_demand, h.cpu_capacity);
  const double share = h.overloaded() ? h.cpu_capacity / h.cpu_demand : 1.0;
  for (TaskId tid : host_copies_[at(id)]) {
    Task& t = state_.task(tid);
    for (TaskCopy& c : t.copies) {
      if (c.host != id) continue;
      c.rate = t.cpu_req * share;
      ++c.version;
      const double left = std::max(0.0, t.length - c.base_progress);
      events_.push({.time = state_.now + left / c.rate,
                    .kind = EventKind::task_complete,
                    .a = tid,
                    .b = static_cast<std::int64_t>(c.copy_serial),
                    .version = c.version});
    }
  }
  note_power(h);
}

void Simulator::start_copy(Task& t, HostId id) {
  Host& h = state_.hosts[at(id)];
  if (!h.online) throw SimError("copy started on an offline host");
  accumulate(id);
  rebase_host(id);
  h.cpu_demand += t.cpu_req;
  h.ram_used += t.ram_req;
  h.disk_used += t.disk_req;
  h.bw_used += t.bw_req;
  ++h.active_task_count;
  TaskCopy c;
  c.host = id;
  c.base_time = state_.now;
  c.started_at = state_.now;
  c.copy_serial = static_cast<std::uint64_t>(copies_started_[t.id]++);
  t.copies.push_back(c);
  host_copies_[at(id)].push_back(t.id);
  rebalance_host(id);

  const auto& f = config_.faults;
  if (f.enabled && f.task_faults) {
    Rng rng = entity_rng(kTaskFaultRng, static_cast<std::uint64_t>(t.id), c.copy_serial);
    events_.push({.time = state_.now + ttf_seconds(rng, f, config_.interval_seconds),
                  .kind = EventKind::task_fault,
                  .a = t.id,
                  .b = static_cast<std::int64_t>(c.copy_serial)});
  }
}

void Simulator::kill_copy(Task& t, std::size_t index, bool fault) {
  const HostId id = t.copies.at(index).host;
  Host& h = state_.hosts[at(id)];
  accumulate(id);
  rebase_host(id);
  t.progress = std::max(t.progress, t.copies[index].base_progress);
  t.copies.erase(t.copies.begin() + static_cast<std::ptrdiff_t>(index));
  auto& list = host_copies_[at(id)];
  list.erase(std::find(list.begin(), list.end(), t.id));
  --h.active_task_count;
  if (h.active_task_count == 0) {
    h.cpu_demand = h.ram_used = h.disk_used = h.bw_used = 0;
  } else {
    h.cpu_demand -= t.cpu_req;
    h.ram_used -= t.ram_req;
    h.disk_used -= t.disk_req;
    h.bw_used -= t.bw_req;
  }
  rebalance_host(id);
  if (fault) ++acc_[at(id)].killed;
}

void Simulator::requeue(Task& t, HostId from) {
  t.state = TaskState::queued;
  t.progress = 0;
  t.prev_host = from;
  t.assigned_host = kNoHost;
  t.restart_pending_since = state_.now;
  queue_.push_back(t.id);
  ++stats_.restarts;
}

namespace {

void after_copy_loss(Task& t) {
  t.state = TaskState::running;
  t.assigned_host = t.copies.front().host;
}

}  // namespace

// ---- events -------------------------------------------------------------------

void Simulator::handle_completion(TaskId id, std::int64_t serial, std::uint64_t version) {
  Task& t = state_.task(id);
  if (t.finished()) return;
  auto it = std::find_if(t.copies.begin(), t.copies.end(),
                         [&](const TaskCopy& c) { return static_cast<std::int64_t>(c.copy_serial) == serial; });
  if (it == t.copies.end() || it->version != version) return;
  const HostId winner = it->host;
  if (state_.now - it->started_at > config_.mitigation.straggler_factor * t.nominal_duration())
    ++acc_[at(winner)].slow_completions;
  while (!t.copies.empty()) kill_copy(t, t.copies.size() - 1, false);
  t.state = TaskState::completed;
  t.completion_time = state_.now;
  t.progress = t.length;
  t.assigned_host = winner;
  ++pending_.tasks_completed;
  pending_.response_sum += state_.now - t.submit_time;
  pending_.restart_sum += t.restart_time_total;

  Job& job = state_.job(t.job_id);
  ++job.finished_tasks;
  if (job.remaining() == 0)
    job_finished(job);
  else
    apply(policy_.on_job_progress(state_, job));
}

void Simulator::job_finished(Job& job) {
  job.completion_time = state_.now;
  ++pending_.jobs_completed;
  pending_.job_response_sum += state_.now - job.submit_time;
  ++pending_.sla_jobs;
  if (state_.now > job.sla_deadline) pending_.sla_violations += job.sla_weight;
  const auto outcome = policy_.on_job_complete(state_, job);
  if (outcome.has_prediction) {
    pending_.stragglers_actual += outcome.actual;
    pending_.stragglers_predicted += outcome.predicted;
    pending_.tp += outcome.tp;
    pending_.fp += outcome.fp;
    pending_.fn += outcome.fn;
  }
}

void Simulator::handle_host_fault(HostId id) {
  Host& h = state_.hosts[at(id)];
  if (!h.online) return;
  ++stats_.host_faults;
  const std::vector<TaskId> victims = host_copies_[at(id)];
  for (TaskId tid : victims) {
    Task& t = state_.task(tid);
    const auto it = std::find_if(t.copies.begin(), t.copies.end(), [&](const TaskCopy& c) { return c.host == id; });
    kill_copy(t, static_cast<std::size_t>(it - t.copies.begin()), true);
    if (t.copies.empty())
      requeue(t, id);
    else
      after_copy_loss(t);
  }
  accumulate(id);
  h.online = false;
  const int down = uniform_int(host_fault_rng_[at(id)], 1, config_.faults.downtime_max);
  h.downtime_remaining = down;
  note_power(h);
  sim_log().debug("t={} host {} failed, {} copies lost, down {} intervals", state_.now, id, victims.size(), down);
  events_.push({.time = state_.now + down * config_.interval_seconds, .kind = EventKind::host_recover, .a = id});
}

void Simulator::handle_recover(HostId id) {
  Host& h = state_.hosts[at(id)];
  accumulate(id);
  h.online = true;
  h.downtime_remaining = 0;
  note_power(h);
  if (config_.faults.host_faults)
    events_.push({.time = state_.now + ttf_seconds(host_fault_rng_[at(id)], config_.faults, config_.interval_seconds),
                  .kind = EventKind::host_fault,
                  .a = id});
}

void Simulator::handle_task_fault(TaskId id, std::int64_t serial) {
  Task& t = state_.task(id);
  if (t.finished()) return;
  auto it = std::find_if(t.copies.begin(), t.copies.end(),
                         [&](const TaskCopy& c) { return static_cast<std::int64_t>(c.copy_serial) == serial; });
  if (it == t.copies.end()) return;
  ++stats_.task_faults;
  const HostId host = it->host;
  kill_copy(t, static_cast<std::size_t>(it - t.copies.begin()), true);
  if (t.copies.empty())
    requeue(t, host);
  else
    after_copy_loss(t);
}

void Simulator::handle_vm_fault(HostId id) {
  ++stats_.vm_creation_faults;
  state_.hosts[at(id)].vm_creation_fault_pending = true;
  events_.push({.time = state_.now + ttf_seconds(vm_fault_rng_[at(id)], config_.faults, config_.interval_seconds),
                .kind = EventKind::vm_creation_fault,
                .a = id});
}

// ---- mitigation actions -------------------------------------------------------

void Simulator::apply(const mitigation::Actions& actions) {
  using mitigation::ActionKind;
  for (const auto& a : actions) {
    if (a.kind == ActionKind::none) continue;
    auto tit = state_.tasks.find(a.task_id);
    if (tit == state_.tasks.end()) throw SimError("mitigation action for unknown task");
    Task& t = tit->second;
    if (a.kind == ActionKind::delay_start) {
      ++t.delays;
      continue;
    }
    const bool valid_target = a.target_host >= 0 && at(a.target_host) < state_.hosts.size() &&
                              state_.hosts[at(a.target_host)].fits(t.ram_req, t.disk_req);
    const bool already_there = std::any_of(t.copies.begin(), t.copies.end(),
                                           [&](const TaskCopy& c) { return c.host == a.target_host; });
    if (t.finished() || t.copies.empty() || !valid_target || already_there) {
      ++stats_.ignored_actions;
      sim_log().debug("t={} ignored action on task {} -> host {}", state_.now, a.task_id, a.target_host);
      continue;
    }
    if (a.kind == ActionKind::rerun) {
      const HostId old = t.assigned_host;
      while (!t.copies.empty()) kill_copy(t, t.copies.size() - 1, false);
      t.progress = 0;
      t.prev_host = old;
      t.assigned_host = a.target_host;
      t.start_time = state_.now;
      t.state = TaskState::rerunning;
      start_copy(t, a.target_host);
    } else {
      start_copy(t, a.target_host);
      t.state = TaskState::speculating;
    }
    t.mitigated = true;
    ++pending_.mitigations;
    sim_log().debug("t={} {} task {} on host {}", state_.now,
                    a.kind == ActionKind::rerun ? "rerun" : (a.kind == ActionKind::clone ? "clone" : "speculate"),
                    a.task_id, a.target_host);
  }
}

// ---- interval close -------------------------------------------------------------

metrics::MetricsSample Simulator::close_interval(double t_end) {
  const double S = config_.interval_seconds;
  metrics::MetricsSample s = pending_;
  double cpu = 0, ram = 0, disk = 0, bw = 0, cpu_cap = 0, ram_cap = 0, disk_cap = 0, bw_cap = 0, contention = 0;
  s.power_min_seen = std::numeric_limits<double>::infinity();
  s.power_max_seen = -std::numeric_limits<double>::infinity();
  for (const Host& h : state_.hosts) {
    accumulate(h.id);
    HostAccumulator& acc = acc_[at(h.id)];
    s.energy += (acc.cpu / h.cpu_capacity) * (h.power_max - h.power_min) + h.power_min * S;
    s.power_min_seen = std::min(s.power_min_seen, acc.power_min_seen);
    s.power_max_seen = std::max(s.power_max_seen, acc.power_max_seen);
    cpu += acc.cpu;
    ram += acc.ram;
    disk += acc.disk;
    bw += acc.bw;
    contention += acc.contention;
    cpu_cap += h.cpu_capacity;
    ram_cap += h.ram_capacity;
    disk_cap += h.disk_capacity;
    bw_cap += h.bw_capacity;
    const int slow = acc.slow_completions, killed = acc.killed;
    acc = HostAccumulator{};
    acc.last_time = t_end;
    acc.slow_completions = slow;
    acc.killed = killed;
    acc.power_min_seen = acc.power_max_seen = host_power(h);
  }
  s.contention = contention / S;
  const metrics::MemoryModel memory{config_.metrics.ram_buffer_fraction, config_.metrics.ram_cache_fraction};
  s.cpu_util = std::clamp(100.0 * cpu / (cpu_cap * S), 0.0, 100.0);
  s.ram_util = ram_cap > 0 ? metrics::memory_percent(ram_cap * S, ram, memory) : 0.0;
  s.disk_util = disk_cap > 0 ? std::clamp(100.0 * disk / (disk_cap * S), 0.0, 100.0) : 0.0;
  s.net_util = bw_cap > 0 ? metrics::network_percent(bw, bw_cap, S) : 0.0;
  return s;
}

void Simulator::finalize_horizon(metrics::MetricsSample& sample) {
  for (auto& [id, t] : state_.tasks) {
    if (t.finished()) continue;
    t.state = TaskState::failed;
    ++sample.tasks_failed;
  }
  for (auto& [id, job] : state_.jobs) {
    if (job.completion_time || job.sla_deadline > state_.now) continue;
    ++sample.sla_jobs;
    sample.sla_violations += job.sla_weight;
  }
}

std::vector<metrics::MetricsSample> simulate(const SimConfig& config, mitigation::Policy& policy) {
  Simulator sim(config, build_fleet(config), resolve_trace(config), policy);
  return sim.run();
}

}  // namespace straggler::sim
