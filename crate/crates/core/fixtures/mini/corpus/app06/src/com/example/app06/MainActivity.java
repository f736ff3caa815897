package com.example.app06;

public class MainActivity {
    private String name = "item 6";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 6);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
