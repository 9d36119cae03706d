#!/usr/bin/env python3
"""Regenerates data/umi_reference.json and data/rules_default.json.

The index holds 169 standardized misconfig classes plus the clean-file
sentinel (id 169). Curated entries carry aliases for the three scanners the
index unifies (checkov, kube-linter, terrascan); filler entries keep the index
at full width with plausible single-tool aliases.
"""

import json
import os

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data")

SENTINEL_ID = 169

# id -> (description, [(tool, rule_id, tool_text)])
CURATED = {
    5: (
        "Service account tokens should not be auto-mounted into pods",
        [
            ("checkov", "CKV_K8S_38", "Ensure that Service Account Tokens are only mounted where necessary"),
            ("kube-linter", "access-to-secrets", "Service account token automounted"),
        ],
    ),
    6: (
        "Workloads should not use the default service account",
        [
            ("checkov", "CKV_K8S_41", "Ensure that default service accounts are not actively used"),
            ("terrascan", "AC_K8S_0034", "Default service account in use"),
        ],
    ),
    9: (
        "Default namespace should not be used",
        [
            ("checkov", "CKV_K8S_21", "The default namespace should not be used"),
            ("kube-linter", "use-namespace", "Object in default namespace"),
            ("terrascan", "AC_K8S_0118", "Default namespace should not be used"),
        ],
    ),
    28: (
        "CPU limits should be set for every container",
        [
            ("checkov", "CKV_K8S_11", "CPU limits should be set"),
            ("kube-linter", "unset-cpu-requirements", "CPU limits not set in config file"),
        ],
    ),
    29: (
        "Memory limits should be set for every container",
        [
            ("checkov", "CKV_K8S_13", "Memory limits should be set"),
            ("kube-linter", "unset-memory-requirements", "Memory limits not set in config file"),
        ],
    ),
    30: (
        "CPU requests should be set for every container",
        [
            ("checkov", "CKV_K8S_10", "CPU requests should be set"),
            ("terrascan", "AC_K8S_0099", "CPU request not set in container spec"),
        ],
    ),
    31: (
        "Memory requests should be set for every container",
        [
            ("checkov", "CKV_K8S_12", "Memory requests should be set"),
            ("terrascan", "AC_K8S_0100", "Memory request not set in container spec"),
        ],
    ),
    45: (
        "Deployments should run more than one replica to avoid a single point of failure",
        [
            ("kube-linter", "minimum-three-replicas", "Only one replica configured"),
            ("checkov", "CKV_K8S_9000", "Ensure deployments run multiple replicas"),
        ],
    ),
    50: (
        "RBAC roles should not grant access to all resource types via wildcards",
        [
            ("checkov", "CKV_K8S_155", "Minimize ClusterRoles that grant control over validating or mutating webhooks"),
            ("terrascan", "AC_K8S_0061", "Wildcard resource grant in role definition"),
        ],
    ),
    51: (
        "RBAC roles should not use wildcard verbs",
        [
            ("checkov", "CKV_K8S_49", "Minimize wildcard use in Roles and ClusterRoles"),
            ("kube-linter", "wildcard-in-rules", "Role uses wildcard verbs"),
        ],
    ),
    52: (
        "Containers should not allow privilege escalation; set allowPrivilegeEscalation=false, "
        "privileged=false, and remove the CAP_SYS_ADMIN capability",
        [
            ("checkov", "CKV_K8S_16", "Container should not be privileged"),
            ("checkov", "CKV_K8S_20", "Containers should not run with allowPrivilegeEscalation"),
            ("kube-linter", "privileged-container", "Container is privileged"),
            ("terrascan", "AC_K8S_0072", "Privileged containers enabled"),
        ],
    ),
    60: (
        "Pods should not share the host IPC namespace",
        [
            ("checkov", "CKV_K8S_18", "Containers should not share the host IPC namespace"),
            ("terrascan", "AC_K8S_0065", "Host IPC namespace shared"),
        ],
    ),
    61: (
        "Pods should not share the host process ID namespace",
        [
            ("checkov", "CKV_K8S_17", "Containers should not share the host process ID namespace"),
            ("kube-linter", "host-pid", "Host PID namespace shared"),
        ],
    ),
    73: (
        "Secrets should not be stored in container environment variables",
        [
            ("checkov", "CKV_K8S_35", "Prefer using secrets as files over secrets as environment variables"),
            ("kube-linter", "env-var-secret", "Secret referenced in environment variable"),
        ],
    ),
    74: (
        "Credentials such as passwords should not be hardcoded in environment variables",
        [
            ("terrascan", "AC_K8S_0013", "Hardcoded credentials in environment"),
            ("checkov", "CKV_K8S_9001", "Ensure no hardcoded passwords in environment variables"),
        ],
    ),
    85: (
        "Liveness probes should be configured for every container",
        [
            ("checkov", "CKV_K8S_8", "Liveness Probe Should be Configured"),
            ("kube-linter", "no-liveness-probe", "No liveness probe configured"),
        ],
    ),
    86: (
        "Readiness probes should be configured for every container",
        [
            ("checkov", "CKV_K8S_9", "Readiness Probe Should be Configured"),
            ("kube-linter", "no-readiness-probe", "No readiness probe configured"),
        ],
    ),
    96: (
        "Containers should drop all default capabilities they do not need",
        [
            ("checkov", "CKV_K8S_37", "Minimize the admission of containers with capabilities assigned"),
            ("kube-linter", "drop-net-raw-capability", "Capabilities not dropped"),
        ],
    ),
    97: (
        "Containers should not add Linux capabilities beyond the default set",
        [
            ("checkov", "CKV_K8S_25", "Minimize the admission of containers with added capability"),
            ("terrascan", "AC_K8S_0085", "Additional capabilities granted under securityContext"),
        ],
    ),
    103: (
        "Pods should not mount hostPath volumes from the node filesystem",
        [
            ("checkov", "CKV_K8S_27", "Do not expose the docker daemon socket to containers"),
            ("kube-linter", "sensitive-host-mounts", "Sensitive host path mounted"),
            ("terrascan", "AC_K8S_0076", "hostPath volume mounted"),
        ],
    ),
    110: (
        "Containers should be required to run as a non-root user",
        [
            ("checkov", "CKV_K8S_23", "Minimize the admission of root containers"),
            ("kube-linter", "run-as-non-root", "Container may run as root"),
        ],
    ),
    111: (
        "Containers should not run with the root user id 0",
        [
            ("checkov", "CKV_K8S_40", "Containers should run as a high UID to avoid host conflict"),
            ("terrascan", "AC_K8S_0087", "Container runs with UID 0"),
        ],
    ),
    112: (
        "Container root filesystems should be mounted read-only",
        [
            ("checkov", "CKV_K8S_22", "Use read-only filesystem for containers where possible"),
            ("kube-linter", "no-read-only-root-fs", "Root filesystem is writable"),
        ],
    ),
    139: (
        "Pods should not share the host network namespace",
        [
            ("checkov", "CKV_K8S_19", "Containers should not share the host network namespace"),
            ("kube-linter", "host-network", "Host network namespace shared"),
            ("terrascan", "AC_K8S_0066", "Host network enabled for pod"),
        ],
    ),
    140: (
        "Container image tag should be fixed - not latest or blank",
        [
            ("checkov", "CKV_K8S_14", "Image Tag should be fixed - not latest or blank"),
            ("kube-linter", "latest-tag", "Use a container image with a specific tag other than latest"),
        ],
    ),
}

SUBJECTS = [
    "Ingress resources", "Network policies", "Pod security policies", "Container images",
    "Service definitions", "ConfigMap objects", "Secret objects", "Persistent volume claims",
    "DaemonSet workloads", "StatefulSet workloads", "CronJob schedules", "Init containers",
    "Sidecar containers", "Admission webhooks", "API server endpoints", "Kubelet parameters",
    "Etcd data stores", "Controller manager flags", "Scheduler settings", "Node selectors",
]

REQUIREMENTS = [
    "restrict traffic to the namespaces that need it",
    "pin digests instead of mutable references",
    "declare explicit resource quotas",
    "disable anonymous authentication",
    "enable audit logging for state changes",
    "rotate credentials on a fixed schedule",
    "enforce TLS for all internal endpoints",
    "limit tokens to the minimum required scope",
    "set explicit seccomp profiles",
    "avoid privileged escalation paths",
    "define pod disruption budgets",
    "avoid exposing the metadata service",
    "declare topology spread constraints",
    "verify image signatures before admission",
    "restrict sysctl settings to the safe subset",
    "cap ephemeral storage consumption",
    "isolate workloads with AppArmor profiles",
    "restrict binding to privileged ports",
    "require explicit runtime classes",
    "scope role bindings to single namespaces",
]


def filler_description(i):
    subject = SUBJECTS[i % len(SUBJECTS)]
    requirement = REQUIREMENTS[(i // len(SUBJECTS)) % len(REQUIREMENTS)]
    return f"{subject} should {requirement}"


def filler_aliases(i, description):
    tool = ["checkov", "kube-linter", "terrascan"][i % 3]
    if tool == "checkov":
        rule_id = f"CKV_K8S_{200 + i}"
    elif tool == "kube-linter":
        rule_id = "-".join(description.lower().split()[:3]).replace(",", "") + f"-{i:03d}"
    else:
        rule_id = f"AC_K8S_{3000 + i:04d}"
    return [{"tool": tool, "rule_id": rule_id, "text": description}]


def build_umi():
    entries = []
    for i in range(SENTINEL_ID):
        if i in CURATED:
            description, aliases = CURATED[i]
            entries.append({
                "id": i,
                "description": description,
                "aliases": [{"tool": t, "rule_id": r, "text": x} for t, r, x in aliases],
            })
        else:
            description = filler_description(i)
            entries.append({
                "id": i,
                "description": description,
                "aliases": filler_aliases(i, description),
            })
    entries.append({
        "id": SENTINEL_ID,
        "description": "No misconfiguration detected in this file",
        "aliases": [],
    })
    descriptions = [e["description"] for e in entries]
    assert len(set(descriptions)) == len(descriptions), "descriptions must be unique"
    assert all(len(d) >= 16 for d in descriptions)
    return {"sentinel_id": SENTINEL_ID, "entries": entries}


POD_CONTAINERS = "spec/containers/[*]"
TPL_CONTAINERS = "spec/template/spec/containers/[*]"
POD_KINDS = ["Pod"]
TPL_KINDS = ["Deployment", "StatefulSet", "DaemonSet", "ReplicaSet", "Job"]


def container_rule(umi_id, suffix, op, rationale, value=None, cmp=None):
    rules = []
    for kinds, base in ((POD_KINDS, POD_CONTAINERS), (TPL_KINDS, TPL_CONTAINERS)):
        predicate = {"op": op, "path": f"{base}/{suffix}"}
        if value is not None:
            predicate["value"] = value
        if cmp is not None:
            predicate["cmp"] = cmp
        rules.append({"umi_id": umi_id, "kinds": kinds, "predicate": predicate,
                      "rationale": rationale})
    return rules


def pod_spec_rule(umi_id, suffix, op, rationale, value=None):
    rules = []
    for kinds, base in ((POD_KINDS, "spec"), (TPL_KINDS, "spec/template/spec")):
        predicate = {"op": op, "path": f"{base}/{suffix}"}
        if value is not None:
            predicate["value"] = value
        rules.append({"umi_id": umi_id, "kinds": kinds, "predicate": predicate,
                      "rationale": rationale})
    return rules


def build_rules():
    rules = []
    rules += pod_spec_rule(52, "securityContext/privileged", "equals",
                           "Set privileged to false; privileged mode grants the container full access to the host.",
                           value="true")
    rules += container_rule(52, "securityContext/privileged", "equals",
                            "Set privileged to false; privileged mode grants the container full access to the host.",
                            value="true")
    rules += container_rule(52, "securityContext/allowPrivilegeEscalation", "equals",
                            "Set allowPrivilegeEscalation to false so child processes cannot gain more privileges.",
                            value="true")
    rules += container_rule(97, "securityContext/capabilities/add", "exists",
                            "Remove added capabilities; grant only what the workload strictly needs.")
    rules += container_rule(96, "securityContext/capabilities/drop", "missing",
                            "Drop unneeded default capabilities, ideally with drop: [ALL].")
    rules.append({"umi_id": 9, "kinds": [],
                  "predicate": {"op": "equals", "path": "metadata/namespace", "value": "default"},
                  "rationale": "Move the object into a dedicated namespace instead of default."})
    rules += container_rule(140, "image", "contains",
                            "Pin the image to a specific tag or digest instead of latest.",
                            value=":latest")
    rules += container_rule(30, "resources/requests/cpu", "missing",
                            "Add resources.requests.cpu so the scheduler can reserve capacity.")
    rules += container_rule(31, "resources/requests/memory", "missing",
                            "Add resources.requests.memory so the scheduler can reserve capacity.")
    rules += container_rule(28, "resources/limits/cpu", "missing",
                            "Add resources.limits.cpu to cap runaway CPU consumption.")
    rules += container_rule(29, "resources/limits/memory", "missing",
                            "Add resources.limits.memory to protect the node from memory pressure.")
    rules += container_rule(110, "securityContext/runAsNonRoot", "missing",
                            "Set runAsNonRoot to true to refuse containers that would run as root.")
    rules += container_rule(111, "securityContext/runAsUser", "equals",
                            "Use a non-zero UID; UID 0 is the root user.", value="0")
    rules += container_rule(112, "securityContext/readOnlyRootFilesystem", "missing",
                            "Set readOnlyRootFilesystem to true; writable root filesystems widen the attack surface.")
    rules += container_rule(85, "livenessProbe", "missing",
                            "Add a liveness probe so the kubelet can restart a wedged container.")
    rules += container_rule(86, "readinessProbe", "missing",
                            "Add a readiness probe so traffic is held until the container can serve.")
    rules += container_rule(73, "env/[*]/name", "contains",
                            "Deliver secrets through secret volumes or secretKeyRef, not plain environment values.",
                            value="SECRET")
    rules += container_rule(74, "env/[*]/name", "contains",
                            "Deliver credentials through secret references, not plain environment values.",
                            value="PASSWORD")
    rules += pod_spec_rule(139, "hostNetwork", "equals",
                           "Disable hostNetwork; sharing the host network exposes node interfaces.",
                           value="true")
    rules += pod_spec_rule(61, "hostPID", "equals",
                           "Disable hostPID; sharing the host PID namespace leaks process information.",
                           value="true")
    rules += pod_spec_rule(60, "hostIPC", "equals",
                           "Disable hostIPC; sharing the host IPC namespace leaks shared memory.",
                           value="true")
    rules += pod_spec_rule(5, "automountServiceAccountToken", "equals",
                           "Set automountServiceAccountToken to false unless the pod calls the API server.",
                           value="true")
    rules += pod_spec_rule(6, "serviceAccountName", "equals",
                           "Create a dedicated service account instead of using default.",
                           value="default")
    rules += pod_spec_rule(103, "volumes/[*]/hostPath", "exists",
                           "Replace hostPath volumes with persistent volume claims or config mounts.")
    rules.append({"umi_id": 45, "kinds": ["Deployment", "StatefulSet", "ReplicaSet"],
                  "predicate": {"op": "compare", "path": "spec/replicas", "value": "1", "cmp": "le"},
                  "rationale": "A single replica is a single point of failure; increase the number of replicas to at least 2."})
    for umi_id, field in ((51, "verbs"), (50, "resources")):
        rules.append({"umi_id": umi_id, "kinds": ["Role", "ClusterRole"],
                      "predicate": {"op": "contains", "path": f"rules/[*]/{field}/[*]", "value": "*"},
                      "rationale": f"Enumerate the {field} the role actually needs instead of using a wildcard."})
    return rules


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    with open(os.path.join(OUT_DIR, "umi_reference.json"), "w") as f:
        json.dump(build_umi(), f, indent=2)
        f.write("\n")
    rules = build_rules()
    distinct = sorted({r["umi_id"] for r in rules})
    assert len(distinct) >= 25, distinct
    with open(os.path.join(OUT_DIR, "rules_default.json"), "w") as f:
        json.dump(rules, f, indent=2)
        f.write("\n")
    print(f"wrote {len(build_umi()['entries'])} UMI entries, "
          f"{len(rules)} rules over {len(distinct)} misconfig ids")


if __name__ == "__main__":
    main()
